//! Lyapunov experiments around computed minimizers.
//!
//! All verdicts here are empirical: the perturbation shells are sampled, and a
//! "stable" verdict only says that `V` stayed within `κ V(0) + abs_tol` along
//! the simulated trajectory.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    conservation_report, evolve, lyapunov_v, ConservationReport, EvolutionTrace, EvolveOptions, Reference,
};
use crate::error::{Error, Result};
use crate::field::{FieldState, LatticeShift};
use crate::minimizer::MinimizeResult;
use crate::models::{restore_charge, ModelSpec};
use crate::par;
use crate::rng;

pub const EMPIRICAL_BANNER: &str = "empirical only: sampled perturbations, not a proof of orbital stability";

/// A map applied to the minimizer before evolving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// Band-limited random field with `‖η‖_X = ε ‖u‖_X`.
    AdditiveNoise { epsilon: f64, band_limit: f64, seed: u64 },
    /// `(1 + ε) u`.
    AmplitudeScale { epsilon: f64 },
    /// `e^{iθ} g_z u` (phase ignored for the real beam model).
    ShiftAndPhase { z: Vec<i64>, theta: f64 },
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Perturbation::AdditiveNoise { epsilon, band_limit, .. } => {
                if !(*epsilon >= 0.0 && epsilon.is_finite()) || !(*band_limit > 0.0) {
                    return Err(Error::InvalidParameter(format!("invalid noise perturbation {self:?}")));
                }
            }
            Perturbation::AmplitudeScale { epsilon } => {
                if !(*epsilon >= 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidParameter(format!("invalid amplitude perturbation {self:?}")));
                }
            }
            Perturbation::ShiftAndPhase { theta, .. } => {
                if !theta.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(())
    }

    /// Size parameter `ε` (zero for pure symmetry moves).
    pub fn magnitude(&self) -> f64 {
        match self {
            Perturbation::AdditiveNoise { epsilon, .. } | Perturbation::AmplitudeScale { epsilon } => *epsilon,
            Perturbation::ShiftAndPhase { .. } => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Perturbation::AdditiveNoise { epsilon, band_limit, seed } => {
                format!("additive_noise(eps={epsilon:e},k<={band_limit},seed={seed})")
            }
            Perturbation::AmplitudeScale { epsilon } => format!("amplitude_scale(eps={epsilon:e})"),
            Perturbation::ShiftAndPhase { z, theta } => format!("shift_and_phase(z={z:?},theta={theta})"),
        }
    }

    pub fn apply(&self, state: &FieldState) -> Result<FieldState> {
        self.validate()?;
        Ok(match self {
            Perturbation::AdditiveNoise { epsilon, band_limit, seed } => {
                if *epsilon == 0.0 {
                    return Ok(state.clone());
                }
                let mut r = rng::stream(*seed, "stability-noise");
                let eta = rng::random_direction(state.model(), state.grid(), *band_limit, &mut r);
                let scale = epsilon * state.x_norm() / eta.x_norm();
                state.add_scaled(scale, &eta)?
            }
            Perturbation::AmplitudeScale { epsilon } => {
                if *epsilon == 0.0 {
                    return Ok(state.clone());
                }
                state.scaled(1.0 + epsilon)
            }
            Perturbation::ShiftAndPhase { z, theta } => {
                if z.len() != state.grid().dim() {
                    return Err(Error::InvalidParameter("shift dimension does not match the grid".into()));
                }
                state.translate(&LatticeShift::new(z.clone())).phase_rotated(*theta)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityOptions {
    pub evolve: EvolveOptions,
    pub kappa: f64,
    pub abs_tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            evolve: EvolveOptions { t_final: 50.0, dt: 1e-3, record_every: 500, blowup_factor: 1e6 },
            kappa: 4.0,
            abs_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    UnstableBlowUp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub perturbation: Perturbation,
    pub label: String,
    /// `‖perturbed − u‖_X`.
    pub perturbation_norm: f64,
    pub v0: f64,
    pub max_v: f64,
    pub initial_orbit_distance: f64,
    pub max_orbit_distance: f64,
    pub conservation: ConservationReport,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub e_ref: f64,
    pub c_ref: f64,
    pub kappa: f64,
    pub abs_tol: f64,
    pub options: StabilityOptions,
    pub rows: Vec<StabilityRow>,
    pub banner: String,
    /// One trace per row, in the same order.
    #[serde(skip)]
    pub traces: Vec<EvolutionTrace>,
}

fn classify(max_v: f64, v0: f64, blow_up: bool, opts: &StabilityOptions) -> StabilityVerdict {
    if blow_up {
        StabilityVerdict::UnstableBlowUp
    } else if max_v <= opts.kappa * v0 + opts.abs_tol {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Unstable
    }
}

/// Evolves each perturbation of the minimizer and audits `V` and the orbit
/// distance along the trajectory. Runs are independent and execute in
/// parallel; rows come back in input order.
pub fn run_stability(
    spec: &ModelSpec,
    result: &MinimizeResult,
    perturbations: &[Perturbation],
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if !result.converged {
        return Err(Error::Minimization("stability runs need a converged minimizer".into()));
    }
    opts.evolve.validate()?;
    let reference = Reference { state: result.state.clone(), e_ref: result.e_delta, c_ref: result.charge };
    let runs = par::map_slice(perturbations, |p| -> Result<(StabilityRow, EvolutionTrace)> {
        let start = p.apply(&reference.state)?;
        let trace = evolve(spec, &start, &opts.evolve, Some(&reference))?;
        let v0 = trace.samples[0].v.unwrap_or(0.0);
        let max_v = trace.samples.iter().filter_map(|s| s.v).fold(0.0, f64::max);
        let dists: Vec<f64> = trace.samples.iter().filter_map(|s| s.orbit_dist).collect();
        let row = StabilityRow {
            perturbation: p.clone(),
            label: p.label(),
            perturbation_norm: start.add_scaled(-1.0, &reference.state)?.x_norm(),
            v0,
            max_v,
            initial_orbit_distance: dists.first().copied().unwrap_or(0.0),
            max_orbit_distance: dists.iter().cloned().fold(0.0, f64::max),
            conservation: conservation_report(&trace),
            verdict: classify(max_v, v0, trace.blow_up, opts),
        };
        Ok((row, trace))
    });
    let (rows, traces): (Vec<_>, Vec<_>) = runs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(StabilityReport {
        e_ref: reference.e_ref,
        c_ref: reference.c_ref,
        kappa: opts.kappa,
        abs_tol: opts.abs_tol,
        options: *opts,
        rows,
        banner: EMPIRICAL_BANNER.into(),
        traces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub radius: f64,
    pub min_v: f64,
    pub max_v: f64,
}

/// Samples `V` on shells `‖η‖_X = r` around the minimizer.
///
/// The same `k` random directions are used for every radius, and each
/// perturbed state is moved back onto the reference charge level, so `V`
/// measures the energy excess on the constraint set and the min-`V` column
/// traces a single smooth curve in `r`.
pub fn v_separation_scan(
    spec: &ModelSpec,
    result: &MinimizeResult,
    radii: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<ShellRow>> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one direction per shell".into()));
    }
    let u = &result.state;
    let h = spec.grid().spacing().iter().cloned().fold(0.0, f64::max);
    let band = std::f64::consts::PI / (4.0 * h);
    let directions: Vec<FieldState> = par::map_range(k, |i| {
        let mut r = rng::stream(seed.wrapping_add(i as u64), "v-scan");
        let d = rng::random_direction(spec.tag(), spec.grid(), band, &mut r);
        let n = d.x_norm();
        d.scaled(1.0 / n)
    });
    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative shell radius {radius}")));
        }
        let values = par::map_slice(&directions, |d| -> Result<f64> {
            let moved = u.add_scaled(radius, d)?;
            let on_level = if radius == 0.0 { moved } else { restore_charge(spec, &moved, result.charge)? };
            Ok(lyapunov_v(spec, &on_level, result.e_delta, result.charge))
        });
        let values = values.into_iter().collect::<Result<Vec<_>>>()?;
        rows.push(ShellRow {
            radius,
            min_v: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max_v: values.iter().cloned().fold(0.0, f64::max),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex64;

    fn bump() -> FieldState {
        let g = Grid::line(64, 12.0).unwrap();
        let psi = g.sample(|x| Complex64::new((-(x[0] * x[0])).exp(), 0.0));
        FieldState::nls(g, psi).unwrap()
    }

    #[test]
    fn zero_magnitude_is_identity() {
        let s = bump();
        for p in [
            Perturbation::AdditiveNoise { epsilon: 0.0, band_limit: 2.0, seed: 1 },
            Perturbation::AmplitudeScale { epsilon: 0.0 },
            Perturbation::ShiftAndPhase { z: vec![0], theta: 0.0 },
        ] {
            assert_eq!(p.apply(&s).unwrap(), s);
        }
    }

    #[test]
    fn noise_has_requested_relative_size() {
        let s = bump();
        let p = Perturbation::AdditiveNoise { epsilon: 1e-2, band_limit: 3.0, seed: 9 };
        let t = p.apply(&s).unwrap();
        let n = t.add_scaled(-1.0, &s).unwrap().x_norm();
        assert!((n - 1e-2 * s.x_norm()).abs() <= 1e-12 * s.x_norm());
        assert_eq!(p.apply(&s).unwrap(), t);
    }

    #[test]
    fn invalid_perturbations_rejected() {
        let s = bump();
        assert!(Perturbation::AmplitudeScale { epsilon: -1.0 }.apply(&s).is_err());
        assert!(Perturbation::ShiftAndPhase { z: vec![1, 2], theta: 0.0 }.apply(&s).is_err());
    }

    #[test]
    fn classification_thresholds() {
        let o = StabilityOptions::default();
        assert_eq!(classify(4.0, 1.0, false, &o), StabilityVerdict::Stable);
        assert_eq!(classify(4.0 + 2e-6, 1.0, false, &o), StabilityVerdict::Unstable);
        assert_eq!(classify(0.0, 0.0, true, &o), StabilityVerdict::UnstableBlowUp);
    }
}
