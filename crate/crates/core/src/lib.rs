//! Numerical toolkit for orbital stability of hylomorphic solitons in
//! Schrödinger, wave and beam equations on periodic grids.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod checkers;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod minimizer;
pub mod nonlinearity;
pub mod models;
pub mod par;
pub mod rng;
pub mod stability;
pub mod verdict;

pub use error::{Error, Result};
pub use field::{orbit_alignment, orbit_distance, translate, FieldState, LatticeShift, ModelTag, OrbitAlignment, Samples};
pub use grid::{Grid, GridSpec};
pub use nonlinearity::{check_w_conditions, Family, TheoremId, WConditionReport, WSpec};
pub use verdict::{EvidenceKind, Finding, Verdict};
pub use models::{charge, energy, evolve_step, grad_charge, grad_energy, x_norm, Integrator, ModelSpec};
pub use functionals::{bound_m, choose_coercivity_params, hylomorphy_check, j_delta, lambda0_estimate, lambda_ratio, nash_check, phi, PenaltyParams};
