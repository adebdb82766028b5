//! The three dynamical systems: energy, charge, their L² gradients, the
//! phase-space norm and one time step.
//!
//! Equations of motion, with `W'(ψ) = W'(|ψ|) ψ/|ψ|`:
//!
//! * NLS: `i ψ_t = −½Δψ + ½W'(ψ)`, `E = ∫ ½|∇ψ|² + W(|ψ|)`, `C = ∫ |ψ|²`.
//! * NWE: `ψ_t = φ`, `φ_t = Δψ − W'(ψ)`, `E = ∫ ½|φ|² + ½|∇ψ|² + W(|ψ|)`,
//!   `C = Im ∫ φ ψ̄`.
//! * NBE: `u_t = v`, `v_t = −u_xxxx − W'(u)`, `E = ∫ ½v² + ½u_xx² + W(|u|)`,
//!   `C = −∫ v u_x`.
//!
//! Gradients are taken in the real inner product `Re ∫ g d̄`, so for NLS
//! `∇E = −Δψ + (W'(|ψ|)/|ψ|) ψ` and `∇C = 2ψ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, ModelTag, Samples};
use crate::grid::Grid;
use crate::nonlinearity::WSpec;

/// A model together with its grid and potential. Immutable and cheap to clone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    tag: ModelTag,
    grid: Grid,
    w: WSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelSpec {
    model: ModelTag,
    grid: Grid,
    w: WSpec,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;
    fn try_from(raw: RawModelSpec) -> Result<Self> {
        ModelSpec::new(raw.model, raw.grid, raw.w)
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(m: ModelSpec) -> Self {
        RawModelSpec { model: m.tag, grid: m.grid, w: m.w }
    }
}

impl ModelSpec {
    pub fn new(tag: ModelTag, grid: Grid, w: WSpec) -> Result<Self> {
        w.validate()?;
        if tag == ModelTag::Nbe && grid.dim() != 1 {
            return Err(Error::InvalidGrid("the beam model is one-dimensional".into()));
        }
        Ok(ModelSpec { tag, grid, w })
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn w(&self) -> &WSpec {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Same model and potential on another grid.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        ModelSpec::new(self.tag, grid, self.w)
    }

    pub fn zero_state(&self) -> FieldState {
        FieldState::zeros(self.tag, self.grid.clone()).expect("zero state is valid")
    }

    fn check(&self, state: &FieldState) {
        assert!(
            state.model() == self.tag && state.grid() == &self.grid,
            "state does not belong to this model/grid"
        );
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn potential_sum(w: &WSpec, field: &Samples) -> f64 {
    match field {
        Samples::Complex(v) => v.iter().map(|z| w.w(z.norm())).sum(),
        Samples::Real(v) => v.iter().map(|x| w.w(x.abs())).sum(),
    }
}

/// `(W'(|f|)/|f|) f`, pointwise.
fn potential_force(w: &WSpec, field: &Samples) -> Samples {
    match field {
        Samples::Complex(v) => Samples::Complex(v.iter().map(|z| z * w.w1_over_s(z.norm())).collect()),
        Samples::Real(v) => Samples::Real(v.iter().map(|x| x * w.w1_over_s(x.abs())).collect()),
    }
}

/// Energy of a state.
///
/// # Panics
/// If the state belongs to a different model or grid.
pub fn energy(spec: &ModelSpec, state: &FieldState) -> f64 {
    spec.check(state);
    let grid = &spec.grid;
    let ksq = grid.k_squared();
    let comps = state.components();
    let potential = grid.cell_volume() * potential_sum(&spec.w, &comps[0]);
    let first = grid.to_spectral(&comps[0].to_complex());
    let stiffness = match spec.tag {
        ModelTag::Nls | ModelTag::Nwe => 0.5 * grid.spectral_quadratic(&first, |k| ksq[k]),
        ModelTag::Nbe => 0.5 * grid.spectral_quadratic(&first, |k| ksq[k] * ksq[k]),
    };
    let kinetic = match spec.tag {
        ModelTag::Nls => 0.0,
        _ => 0.5 * grid.integrate(&comps[1].modulus_sq()),
    };
    kinetic + stiffness + potential
}

/// Charge of a state (signed for NWE and NBE).
///
/// # Panics
/// If the state belongs to a different model or grid.
pub fn charge(spec: &ModelSpec, state: &FieldState) -> f64 {
    spec.check(state);
    let grid = &spec.grid;
    match spec.tag {
        ModelTag::Nls => grid.integrate(&state.components()[0].modulus_sq()),
        ModelTag::Nwe => {
            let psi = state.complex(0).expect("complex");
            let phi = state.complex(1).expect("complex");
            grid.cell_volume() * psi.iter().zip(phi).map(|(p, f)| (f * p.conj()).im).sum::<f64>()
        }
        ModelTag::Nbe => {
            let u = state.real(0).expect("real");
            let v = state.real(1).expect("real");
            let ux = grid.derivative_real(u, 0, 1).expect("order 1 is valid");
            -grid.cell_volume() * v.iter().zip(&ux).map(|(a, b)| a * b).sum::<f64>()
        }
    }
}

/// L² gradient of the energy.
pub fn grad_energy(spec: &ModelSpec, state: &FieldState) -> FieldState {
    spec.check(state);
    let grid = &spec.grid;
    let ksq = grid.k_squared();
    let comps = state.components();
    let force = potential_force(&spec.w, &comps[0]);
    let first = match (&comps[0], force) {
        (Samples::Complex(psi), Samples::Complex(f)) => {
            let lap = grid.apply_multiplier(psi, |k| c(ksq[k]));
            Samples::Complex(lap.iter().zip(&f).map(|(a, b)| a + b).collect())
        }
        (Samples::Real(u), Samples::Real(f)) => {
            let d4 = grid.apply_multiplier_real(u, |k| c(ksq[k] * ksq[k]));
            Samples::Real(d4.iter().zip(&f).map(|(a, b)| a + b).collect())
        }
        _ => unreachable!("force has the component kind of its input"),
    };
    let mut out = vec![first];
    if spec.tag != ModelTag::Nls {
        out.push(comps[1].clone());
    }
    FieldState::from_parts_unchecked(spec.tag, grid.clone(), out)
}

/// L² gradient of the charge.
pub fn grad_charge(spec: &ModelSpec, state: &FieldState) -> FieldState {
    spec.check(state);
    let grid = &spec.grid;
    let i = Complex64::new(0.0, 1.0);
    let comps = match spec.tag {
        ModelTag::Nls => {
            let psi = state.complex(0).expect("complex");
            vec![Samples::Complex(psi.iter().map(|z| z * 2.0).collect())]
        }
        ModelTag::Nwe => {
            let psi = state.complex(0).expect("complex");
            let phi = state.complex(1).expect("complex");
            vec![
                Samples::Complex(phi.iter().map(|z| -i * z).collect()),
                Samples::Complex(psi.iter().map(|z| i * z).collect()),
            ]
        }
        ModelTag::Nbe => {
            let u = state.real(0).expect("real");
            let v = state.real(1).expect("real");
            let vx = grid.derivative_real(v, 0, 1).expect("order 1 is valid");
            let ux = grid.derivative_real(u, 0, 1).expect("order 1 is valid");
            vec![Samples::Real(vx), Samples::Real(ux.into_iter().map(|x| -x).collect())]
        }
    };
    FieldState::from_parts_unchecked(spec.tag, grid.clone(), comps)
}

pub fn x_norm(spec: &ModelSpec, state: &FieldState) -> f64 {
    spec.check(state);
    state.x_norm()
}

/// Inverse of the phase-space Riesz map: divides each Fourier mode by the
/// weight of the phase-space norm. Used as the Sobolev preconditioner and to
/// measure gradients in the dual norm.
pub fn riesz_inverse(state: &FieldState) -> FieldState {
    state.map_spectral(|i, k| 1.0 / state.x_weight(i, k))
}

/// Dual phase-space norm of an L² gradient.
pub fn dual_norm(g: &FieldState) -> f64 {
    g.dot(&riesz_inverse(g)).expect("same layout").max(0.0).sqrt()
}

/// Rescales one component so the charge equals `c_target`: `ψ·√(c/C)` for
/// NLS, `φ·c/C` for NWE and `v·c/C` for NBE.
pub fn restore_charge(spec: &ModelSpec, state: &FieldState, c_target: f64) -> Result<FieldState> {
    let current = charge(spec, state);
    let threshold = 1e-12 * (1.0 + state.x_norm());
    if current.abs() < threshold || !current.is_finite() {
        return Err(Error::ChargeRestoration(current));
    }
    let ratio = c_target / current;
    let out = match spec.tag {
        ModelTag::Nls => {
            if ratio <= 0.0 {
                return Err(Error::ChargeRestoration(current));
            }
            state.scaled(ratio.sqrt())
        }
        _ => state.with_component_scaled(1, ratio),
    };
    Ok(out)
}

/// Image of a state under time reversal: `conj ψ` for NLS, `(ψ, −φ)` and
/// `(u, −v)` for the second-order models.
pub fn time_reversed(state: &FieldState) -> FieldState {
    match state.model() {
        ModelTag::Nls => {
            let psi = state.complex(0).expect("complex");
            FieldState::from_parts_unchecked(
                ModelTag::Nls,
                state.grid().clone(),
                vec![Samples::Complex(psi.iter().map(|z| z.conj()).collect())],
            )
        }
        _ => state.with_component_scaled(1, -1.0),
    }
}

/// Precomputed propagators for a fixed time step.
#[derive(Debug, Clone)]
pub struct Integrator {
    spec: ModelSpec,
    dt: f64,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    /// `exp(−i|k|² dt/2)` per Fourier mode.
    Schrodinger { linear: Vec<Complex64> },
    /// Exact flow of `ψ_tt = −ω² ψ` per mode: `cos ωt`, `sin ωt / ω`, `ω sin ωt`.
    Oscillator { cos: Vec<f64>, sinc: Vec<f64>, omega_sin: Vec<f64> },
}

impl Integrator {
    pub fn new(spec: &ModelSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let ksq = spec.grid.k_squared();
        let kernel = match spec.tag {
            ModelTag::Nls => Kernel::Schrodinger {
                linear: ksq.iter().map(|k2| Complex64::from_polar(1.0, -0.5 * k2 * dt)).collect(),
            },
            ModelTag::Nwe | ModelTag::Nbe => {
                let m_sq = spec.w.m_sq;
                let omegas: Vec<f64> = ksq
                    .iter()
                    .map(|&k2| if spec.tag == ModelTag::Nwe { k2 + m_sq } else { k2 * k2 + m_sq }.sqrt())
                    .collect();
                Kernel::Oscillator {
                    cos: omegas.iter().map(|w| (w * dt).cos()).collect(),
                    sinc: omegas.iter().map(|&w| if w == 0.0 { dt } else { (w * dt).sin() / w }).collect(),
                    omega_sin: omegas.iter().map(|w| w * (w * dt).sin()).collect(),
                }
            }
        };
        Ok(Integrator { spec: spec.clone(), dt, kernel })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// One Strang step.
    pub fn step(&self, state: &FieldState) -> FieldState {
        self.spec.check(state);
        match &self.kernel {
            Kernel::Schrodinger { linear } => self.step_nls(state, linear),
            Kernel::Oscillator { cos, sinc, omega_sin } => self.step_oscillator(state, cos, sinc, omega_sin),
        }
    }

    fn nonlinear_phase(&self, psi: &mut [Complex64], tau: f64) {
        let w = &self.spec.w;
        for z in psi.iter_mut() {
            // ½ W'(s)/s is the local frequency; |ψ| is invariant under the rotation
            let omega = 0.5 * w.w1_over_s(z.norm());
            *z *= Complex64::from_polar(1.0, -omega * tau);
        }
    }

    fn step_nls(&self, state: &FieldState, linear: &[Complex64]) -> FieldState {
        let grid = &self.spec.grid;
        let mut psi = state.complex(0).expect("complex").to_vec();
        self.nonlinear_phase(&mut psi, 0.5 * self.dt);
        grid.fft(&mut psi);
        psi.iter_mut().zip(linear).for_each(|(z, l)| *z *= l);
        grid.ifft(&mut psi);
        self.nonlinear_phase(&mut psi, 0.5 * self.dt);
        FieldState::from_parts_unchecked(ModelTag::Nls, grid.clone(), vec![Samples::Complex(psi)])
    }

    /// `(W'(s)/s − m²) f`: the part of the force not in the linear propagator.
    fn kick(&self, field: &[Complex64], velocity: &mut [Complex64], tau: f64) {
        let w = &self.spec.w;
        let m_sq = w.m_sq;
        for (v, f) in velocity.iter_mut().zip(field) {
            *v -= f * ((w.w1_over_s(f.norm()) - m_sq) * tau);
        }
    }

    fn step_oscillator(&self, state: &FieldState, cos: &[f64], sinc: &[f64], omega_sin: &[f64]) -> FieldState {
        let grid = &self.spec.grid;
        let comps = state.components();
        let mut x = comps[0].to_complex();
        let mut v = comps[1].to_complex();
        let half = 0.5 * self.dt;
        self.kick(&x, &mut v, half);
        grid.fft(&mut x);
        grid.fft(&mut v);
        for k in 0..x.len() {
            let (x0, v0) = (x[k], v[k]);
            x[k] = x0 * cos[k] + v0 * sinc[k];
            v[k] = v0 * cos[k] - x0 * omega_sin[k];
        }
        grid.ifft(&mut x);
        grid.ifft(&mut v);
        self.kick(&x, &mut v, half);
        let comps = if self.spec.tag == ModelTag::Nbe {
            vec![
                Samples::Real(x.into_iter().map(|z| z.re).collect()),
                Samples::Real(v.into_iter().map(|z| z.re).collect()),
            ]
        } else {
            vec![Samples::Complex(x), Samples::Complex(v)]
        };
        FieldState::from_parts_unchecked(self.spec.tag, grid.clone(), comps)
    }
}

/// One integrator step from scratch. Prefer [`Integrator`] for repeated steps.
pub fn evolve_step(spec: &ModelSpec, state: &FieldState, dt: f64) -> Result<FieldState> {
    Ok(Integrator::new(spec, dt)?.step(state))
}

/// Default spec helpers used throughout tests and the CLI demo.
impl ModelSpec {
    /// 1D cubic focusing NLS, `W(s) = ½s² − s⁴/4`.
    pub fn cubic_nls_1d(n: usize, length: f64) -> Result<Self> {
        ModelSpec::new(ModelTag::Nls, Grid::line(n, length)?, WSpec::single_power(1.0, 1.0, 4.0)?)
    }
}
