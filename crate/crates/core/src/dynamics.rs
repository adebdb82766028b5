//! Time evolution with sampled diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{orbit_distance, FieldState};
use crate::models::{charge, energy, Integrator, ModelSpec};

/// Reference point for the Lyapunov function and the orbit distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub state: FieldState,
    pub e_ref: f64,
    /// Signed charge of the reference.
    pub c_ref: f64,
}

impl Reference {
    /// Reference at a state, with its own energy and charge.
    pub fn at(spec: &ModelSpec, state: &FieldState) -> Self {
        Reference { state: state.clone(), e_ref: energy(spec, state), c_ref: charge(spec, state) }
    }
}

/// `V(u) = (E(u) − e)² + (C(u) − c)²`.
pub fn lyapunov_v(spec: &ModelSpec, state: &FieldState, e_ref: f64, c_ref: f64) -> f64 {
    let de = energy(spec, state) - e_ref;
    let dc = charge(spec, state) - c_ref;
    de * de + dc * dc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
    /// Abort once `‖u‖_X > blowup_factor · (1 + ‖u₀‖_X)`.
    pub blowup_factor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { t_final: 10.0, dt: 1e-3, record_every: 100, blowup_factor: 1e6 }
    }
}

impl EvolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("T = {} must be > 0", self.t_final)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::InvalidParameter("blowup_factor must exceed 1".into()));
        }
        Ok(())
    }

    /// Number of steps: `T/dt` rounded to the nearest integer (at least one).
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub energy: f64,
    pub charge: f64,
    pub v: Option<f64>,
    pub sharp: f64,
    pub x_norm: f64,
    pub orbit_dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub samples: Vec<TraceSample>,
    pub dt: f64,
    pub steps: usize,
    pub blow_up: bool,
    #[serde(skip)]
    pub final_state: FieldState,
}

fn sample(spec: &ModelSpec, state: &FieldState, t: f64, reference: Option<&Reference>) -> Result<TraceSample> {
    let (v, orbit_dist) = match reference {
        Some(r) => (Some(lyapunov_v(spec, state, r.e_ref, r.c_ref)), Some(orbit_distance(state, &r.state)?)),
        None => (None, None),
    };
    Ok(TraceSample {
        t,
        energy: energy(spec, state),
        charge: charge(spec, state),
        v,
        sharp: state.sharp_seminorm()?,
        x_norm: state.x_norm(),
        orbit_dist,
    })
}

/// Evolves `state0` to `T`, recording every `record_every` steps and at the
/// final step. A non-finite field or a runaway norm stops the run with
/// `blow_up` set; the samples gathered so far are kept.
pub fn evolve(
    spec: &ModelSpec,
    state0: &FieldState,
    opts: &EvolveOptions,
    reference: Option<&Reference>,
) -> Result<EvolutionTrace> {
    opts.validate()?;
    if state0.model() != spec.tag() || state0.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    let integ = Integrator::new(spec, opts.dt)?;
    let steps = opts.steps();
    let limit = opts.blowup_factor * (1.0 + state0.x_norm());
    let mut samples = vec![sample(spec, state0, 0.0, reference)?];
    let mut state = state0.clone();
    let mut blow_up = false;
    let mut taken = 0;
    for k in 1..=steps {
        let next = integ.step(&state);
        if !next.is_finite() {
            blow_up = true;
            break;
        }
        state = next;
        taken = k;
        if k % opts.record_every == 0 || k == steps {
            let s = sample(spec, &state, k as f64 * opts.dt, reference)?;
            let runaway = !(s.x_norm <= limit) || !s.energy.is_finite();
            samples.push(s);
            if runaway {
                blow_up = true;
                break;
            }
        }
    }
    Ok(EvolutionTrace { samples, dt: opts.dt, steps: taken, blow_up, final_state: state })
}

/// Largest relative drifts `max_t |Q(t) − Q(0)| / max(1, |Q(0)|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub energy_drift: f64,
    pub charge_drift: f64,
}

pub fn conservation_report(trace: &EvolutionTrace) -> ConservationReport {
    let drift = |f: fn(&TraceSample) -> f64| {
        let q0 = trace.samples.first().map(f).unwrap_or(0.0);
        let scale = q0.abs().max(1.0);
        trace.samples.iter().map(|s| (f(s) - q0).abs() / scale).fold(0.0, f64::max)
    };
    ConservationReport { energy_drift: drift(|s| s.energy), charge_drift: drift(|s| s.charge) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ModelTag;
    use crate::grid::Grid;
    use crate::nonlinearity::WSpec;
    use num_complex::Complex64;

    #[test]
    fn zero_state_trace_is_zero() {
        let spec = ModelSpec::cubic_nls_1d(64, 10.0).unwrap();
        let opts = EvolveOptions { t_final: 1.0, dt: 1e-2, record_every: 10, ..Default::default() };
        let tr = evolve(&spec, &spec.zero_state(), &opts, None).unwrap();
        assert_eq!(tr.samples.len(), 11);
        assert!(tr.samples.iter().all(|s| s.energy == 0.0 && s.charge == 0.0 && s.sharp == 0.0 && s.x_norm == 0.0));
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(!tr.blow_up);
    }

    #[test]
    fn single_sample_has_zero_drift() {
        let spec = ModelSpec::cubic_nls_1d(64, 10.0).unwrap();
        let s = FieldState::nls(spec.grid().clone(), vec![Complex64::new(0.1, 0.0); 64]).unwrap();
        let mut tr = evolve(&spec, &s, &EvolveOptions { t_final: 0.1, dt: 0.1, ..Default::default() }, None).unwrap();
        tr.samples.truncate(1);
        let rep = conservation_report(&tr);
        assert_eq!(rep.energy_drift, 0.0);
        assert_eq!(rep.charge_drift, 0.0);
    }

    #[test]
    fn options_validated() {
        let spec = ModelSpec::cubic_nls_1d(64, 10.0).unwrap();
        let z = spec.zero_state();
        assert!(evolve(&spec, &z, &EvolveOptions { dt: 0.0, ..Default::default() }, None).is_err());
        assert!(evolve(&spec, &z, &EvolveOptions { t_final: -1.0, ..Default::default() }, None).is_err());
        assert!(evolve(&spec, &z, &EvolveOptions { record_every: 0, ..Default::default() }, None).is_err());
    }

    #[test]
    fn lyapunov_vanishes_at_reference() {
        let spec = ModelSpec::new(ModelTag::Nls, Grid::line(64, 10.0).unwrap(), WSpec::single_power(1.0, 1.0, 4.0).unwrap()).unwrap();
        let psi = spec.grid().sample(|x| Complex64::new((-(x[0] * x[0])).exp(), 0.0));
        let s = FieldState::nls(spec.grid().clone(), psi).unwrap();
        let r = Reference::at(&spec, &s);
        assert_eq!(lyapunov_v(&spec, &s, r.e_ref, r.c_ref), 0.0);
        assert!(lyapunov_v(&spec, &s.scaled(1.1), r.e_ref, r.c_ref) > 0.0);
    }
}
