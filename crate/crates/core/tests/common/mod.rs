#![allow(dead_code)]

use hylosolve_core::functionals::{choose_coercivity_params, NASH_SAMPLES};
use hylosolve_core::minimizer::{default_init, minimize_jdelta, refine_constrained, MinimizeOptions, MinimizeResult};
use hylosolve_core::{FieldState, Grid, ModelSpec, ModelTag, WSpec};
use num_complex::Complex64;

pub fn cubic_nls(n: usize, l: f64) -> ModelSpec {
    ModelSpec::new(ModelTag::Nls, Grid::line(n, l).unwrap(), WSpec::single_power(1.0, 1.0, 4.0).unwrap()).unwrap()
}

/// Penalized minimum at `delta` (auto coercivity) and its constrained
/// refinement.
pub fn soliton(spec: &ModelSpec, delta: f64) -> (MinimizeResult, MinimizeResult) {
    let params = choose_coercivity_params(spec, NASH_SAMPLES, 7).unwrap().penalty(delta).unwrap();
    let opts = MinimizeOptions::default();
    let init = default_init(spec, &params).unwrap();
    let pen = minimize_jdelta(spec, &params, &init, &opts).unwrap();
    let refined = refine_constrained(spec, pen.charge, &pen.state, &opts).unwrap();
    (pen, refined)
}

pub fn gaussian(grid: &Grid, amplitude: f64, width: f64, velocity: f64) -> FieldState {
    let psi = grid.sample(|x| Complex64::from_polar(amplitude * (-x[0] * x[0] / (2.0 * width * width)).exp(), velocity * x[0]));
    FieldState::nls(grid.clone(), psi).unwrap()
}
