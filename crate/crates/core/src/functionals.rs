//! Derived functionals of the variational scheme and the probes behind its
//! hypotheses.
//!
//! * `Λ(u) = E(u)/|C(u)|`, `Φ(u) = E(u) + 2a|C(u)|^s`, `J_δ = Λ + δΦ`.
//! * `J_δ ≥ (δ/2)Φ − M` whenever `E + a|C|^s ≥ 0`, with
//!   `M = −a min_{t≥0} ((δ/2)t^s − t^{s−1})`.
//! * `Λ₀` is the lower limit of `Λ` along states whose auxiliary seminorm
//!   vanishes, estimated from Gaussian probe families.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldState, ModelTag, Samples};
use crate::grid::Grid;
use crate::models::{charge, energy, ModelSpec};
use crate::nonlinearity::{mass_critical, Family};
use crate::par;
use crate::rng;

/// Penalty parameters `(δ, a, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub delta: f64,
    pub a: f64,
    pub s_exp: f64,
}

impl PenaltyParams {
    pub fn new(delta: f64, a: f64, s_exp: f64) -> Result<Self> {
        let p = PenaltyParams { delta, a, s_exp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must be > 0", self.delta)));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::InvalidParameter(format!("a = {} must be >= 0", self.a)));
        }
        if !(self.s_exp.is_finite() && self.s_exp >= 1.0) {
            return Err(Error::InvalidParameter(format!("s = {} must be >= 1", self.s_exp)));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        PenaltyParams::new(delta, self.a, self.s_exp)
    }
}

/// Threshold below which `|C|` is treated as zero.
pub fn near_zero_threshold(state: &FieldState) -> f64 {
    1e-12 * (1.0 + state.x_norm())
}

/// `Λ(u) = E(u)/|C(u)|`.
pub fn lambda_ratio(spec: &ModelSpec, state: &FieldState) -> Result<f64> {
    let c = charge(spec, state);
    let threshold = near_zero_threshold(state);
    if !(c.abs() >= threshold) {
        return Err(Error::NearZeroCharge { charge: c, threshold });
    }
    Ok(energy(spec, state) / c.abs())
}

/// `Φ(u) = E(u) + 2a|C(u)|^s`.
pub fn phi(spec: &ModelSpec, state: &FieldState, params: &PenaltyParams) -> f64 {
    energy(spec, state) + 2.0 * params.a * charge(spec, state).abs().powf(params.s_exp)
}

/// `J_δ(u) = Λ(u) + δΦ(u)`.
pub fn j_delta(spec: &ModelSpec, state: &FieldState, params: &PenaltyParams) -> Result<f64> {
    let e = energy(spec, state);
    let c = charge(spec, state);
    let threshold = near_zero_threshold(state);
    if !(c.abs() >= threshold) {
        return Err(Error::NearZeroCharge { charge: c, threshold });
    }
    Ok(e / c.abs() + params.delta * (e + 2.0 * params.a * c.abs().powf(params.s_exp)))
}

/// `M = −a min_{t≥0} ((δ/2)t^s − t^{s−1})`, attained at `t* = 2(s−1)/(δs)`;
/// for `s = 1` the minimum sits at `t = 0` and `M = a`.
pub fn bound_m(params: &PenaltyParams) -> f64 {
    let PenaltyParams { delta, a, s_exp: s } = *params;
    if a == 0.0 {
        return 0.0;
    }
    if s == 1.0 {
        return a;
    }
    let t_star = 2.0 * (s - 1.0) / (delta * s);
    a * t_star.powf(s - 1.0) / s
}

/// How the coercivity constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoercivityMethod {
    /// `W ≥ 0`, so `E ≥ 0` and no penalty is needed.
    NonnegativePotential,
    /// Nash inequality with an empirical constant and Young's inequality.
    Nash,
    /// Supremum of `−E/|C|^s` over random probe states, doubled.
    SampledFallback,
}

/// Coercivity exponent and constant: `E + a|C|^s ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub a: f64,
    pub s_exp: f64,
    pub method: CoercivityMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nash: Option<NashReport>,
    /// Number of probe states behind a sampled constant.
    pub samples: usize,
}

impl Coercivity {
    pub fn penalty(&self, delta: f64) -> Result<PenaltyParams> {
        PenaltyParams::new(delta, self.a, self.s_exp)
    }
}

/// Safety factor applied to every estimated coercivity constant.
pub const COERCIVITY_SAFETY: f64 = 2.0;

/// Default number of random fields in the Nash probe.
pub const NASH_SAMPLES: usize = 1000;

/// Picks `(a, s)` with `E + a|C|^s ≥ 0`.
///
/// For NLS with a focusing power `−(b/p)s^p`, the Nash inequality
/// `‖ψ‖_p^p ≤ b_p ‖ψ‖₂^r ‖∇ψ‖₂^q` and Young's inequality against `½‖∇ψ‖²`
/// give `E ≥ −K ‖ψ‖₂^{2s}` with `s = r/(2−q)` and
/// `K = (2−q)/(2q) · (q c b_p)^{2/(2−q)}`, `c = b/p`. The exponent is forced
/// by scaling: the soliton branch has `E ~ −C^s`.
///
/// For NWE and NBE a nonnegative potential needs no penalty; otherwise the
/// constant is sampled with `s = 2`.
pub fn choose_coercivity_params(spec: &ModelSpec, budget: usize, seed: u64) -> Result<Coercivity> {
    let w = spec.w();
    let nonnegative = match w.family {
        Family::Saturating { .. } => true,
        Family::SinglePower { b, .. } => b <= 0.0,
        Family::DoublePower { b, .. } => b == 0.0,
    };
    if nonnegative {
        return Ok(Coercivity { a: 0.0, s_exp: 1.0, method: CoercivityMethod::NonnegativePotential, nash: None, samples: 0 });
    }
    match spec.tag() {
        ModelTag::Nls => {
            let (coef, p) = w.focusing_term().expect("checked above");
            let critical = mass_critical(spec.dim());
            if p >= critical {
                return Err(Error::Supercritical { p, critical });
            }
            let nash = nash_check(spec.grid(), p, budget, seed)?;
            let q = nash.nash_q;
            let r = nash.nash_r;
            let s_exp = r / (2.0 - q);
            let k = (2.0 - q) / (2.0 * q) * (q * coef * nash.b_p).powf(2.0 / (2.0 - q));
            Ok(Coercivity { a: COERCIVITY_SAFETY * k, s_exp, method: CoercivityMethod::Nash, nash: Some(nash), samples: budget })
        }
        ModelTag::Nwe | ModelTag::Nbe => {
            let s_exp = 2.0;
            let grid = spec.grid();
            let opts = rng::RandomStateOptions::for_grid(grid);
            let worst = par::max_range(budget, |i| {
                let mut r = rng::stream(seed.wrapping_add(i as u64), "coercivity");
                let state = rng::random_state(spec.tag(), grid, &opts, &mut r);
                let c = charge(spec, &state).abs();
                if c < near_zero_threshold(&state) {
                    return f64::NEG_INFINITY;
                }
                -energy(spec, &state) / c.powf(s_exp)
            });
            let a = COERCIVITY_SAFETY * worst.max(0.0);
            Ok(Coercivity { a, s_exp, method: CoercivityMethod::SampledFallback, nash: None, samples: budget })
        }
    }
}

/// Empirical Nash constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub p: f64,
    pub b_p: f64,
    /// Gradient exponent `q = N(p−2)/2`.
    pub nash_q: f64,
    /// L² exponent `r = p − q`.
    pub nash_r: f64,
    pub samples: usize,
    /// Largest ratio seen over the random fields alone.
    pub random_max: f64,
    /// Largest ratio seen over the Gaussian widths alone.
    pub gaussian_max: f64,
}

/// Nash exponents `(q, r)` for `L^p` in dimension `dim`.
pub fn nash_exponents(p: f64, dim: usize) -> (f64, f64) {
    let q = p * dim as f64 * (0.5 - 1.0 / p);
    (q, p - q)
}

/// `‖ψ‖_p^p / (‖ψ‖₂^r ‖∇ψ‖₂^q)`, or `None` when `∇ψ` vanishes.
pub fn nash_ratio(grid: &Grid, psi: &[Complex64], p: f64) -> Option<f64> {
    let (q, r) = nash_exponents(p, grid.dim());
    let l2 = grid.integrate(&psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
    let spec = grid.to_spectral(psi);
    let ksq = grid.k_squared();
    let grad = grid.spectral_quadratic(&spec, |k| ksq[k]);
    if !(l2 > 0.0) || !(grad > 1e-20 * l2) {
        return None;
    }
    let lp = grid.integrate(&psi.iter().map(|z| z.norm().powf(p)).collect::<Vec<_>>());
    Some(lp / (l2.powf(r / 2.0) * grad.powf(q / 2.0)))
}

/// Gaussian widths used as adversarial Nash probes.
const NASH_GAUSSIAN_WIDTHS: usize = 30;

/// Maximizes the Nash ratio over `samples` random band-limited fields (half
/// zero-mean, half localized) plus Gaussians of 30 widths between `2h` and
/// `L/8`.
pub fn nash_check(grid: &Grid, p: f64, samples: usize, seed: u64) -> Result<NashReport> {
    let critical = mass_critical(grid.dim());
    if !(p > 2.0 && p < critical) {
        return Err(Error::Supercritical { p, critical });
    }
    let (q, r) = nash_exponents(p, grid.dim());
    let opts = rng::RandomStateOptions::for_grid(grid);
    let random_max = par::max_range(samples, |i| {
        let mut stream = rng::stream(seed.wrapping_add(i as u64), "nash");
        let psi = if i % 2 == 0 {
            rng::band_limited_complex(grid, opts.k_max, &mut stream)
        } else {
            let s = rng::random_state(ModelTag::Nls, grid, &opts, &mut stream);
            s.complex(0).expect("complex").to_vec()
        };
        nash_ratio(grid, &psi, p).unwrap_or(f64::NEG_INFINITY)
    });
    let h = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let l = grid.box_length().iter().cloned().fold(f64::INFINITY, f64::min);
    let (lo, hi) = (2.0 * h, l / 8.0);
    let gaussian_max = par::max_range(NASH_GAUSSIAN_WIDTHS, |j| {
        let t = j as f64 / (NASH_GAUSSIAN_WIDTHS - 1) as f64;
        let width = lo * (hi / lo).powf(t);
        let psi: Vec<Complex64> = gaussian(grid, 1.0, width).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        nash_ratio(grid, &psi, p).unwrap_or(f64::NEG_INFINITY)
    });
    Ok(NashReport { p, b_p: random_max.max(gaussian_max), nash_q: q, nash_r: r, samples, random_max, gaussian_max })
}

/// Centred Gaussian `A exp(−|x|²/(2σ²))`.
pub fn gaussian(grid: &Grid, amplitude: f64, width: f64) -> Vec<f64> {
    grid.sample(|x| amplitude * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * width * width)).exp())
}

/// One member of the Gaussian probe families.
///
/// NLS: `ψ = A g_σ`. NWE: `(A g_σ, −iω A g_σ)`. NBE: `u = A g_σ cos(k₀x)`,
/// `v = −c u_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProbe {
    pub amplitude: f64,
    pub width: f64,
    /// `ω` for NWE, `c` for NBE, unused for NLS.
    pub velocity: f64,
    /// Carrier wavenumber `k₀` (NBE only).
    pub carrier: f64,
}

impl GaussianProbe {
    pub fn state(&self, spec: &ModelSpec) -> FieldState {
        let grid = spec.grid();
        let g = gaussian(grid, self.amplitude, self.width);
        let comps = match spec.tag() {
            ModelTag::Nls => vec![Samples::Complex(g.iter().map(|&x| Complex64::new(x, 0.0)).collect())],
            ModelTag::Nwe => vec![
                Samples::Complex(g.iter().map(|&x| Complex64::new(x, 0.0)).collect()),
                Samples::Complex(g.iter().map(|&x| Complex64::new(0.0, -self.velocity * x)).collect()),
            ],
            ModelTag::Nbe => {
                let u: Vec<f64> = g.iter().enumerate().map(|(i, x)| x * (self.carrier * grid.position(i)[0]).cos()).collect();
                let ux = grid.derivative_real(&u, 0, 1).expect("order 1 is valid");
                vec![Samples::Real(u), Samples::Real(ux.into_iter().map(|d| -self.velocity * d).collect())]
            }
        };
        FieldState::new(spec.tag(), grid.clone(), comps).expect("probe is finite")
    }

    /// Probe with the velocity minimizing `Λ` in closed form: with
    /// `E = ½v²D + E₀` and `|C| = vD`, the optimum is `v = √(2E₀/D)`.
    pub fn optimal(spec: &ModelSpec, amplitude: f64, width: f64, carrier: f64) -> GaussianProbe {
        let mut probe = GaussianProbe { amplitude, width, velocity: 0.0, carrier };
        if spec.tag() == ModelTag::Nls {
            return probe;
        }
        let still = probe.state(spec);
        let e0 = energy(spec, &still);
        let d = match spec.tag() {
            ModelTag::Nwe => spec.grid().integrate(&still.components()[0].modulus_sq()),
            _ => {
                probe.velocity = 1.0;
                let moving = probe.state(spec);
                spec.grid().integrate(&moving.components()[1].modulus_sq())
            }
        };
        // an indefinite static energy makes Λ unbounded below as v → 0
        const V_MIN: f64 = 1e-3;
        probe.velocity = if d > 0.0 && e0 > 0.0 { (2.0 * e0 / d).sqrt().max(V_MIN) } else { V_MIN };
        probe
    }

    /// Effective `Λ` (ratio at the optimal velocity) and the probe itself.
    fn evaluate(spec: &ModelSpec, amplitude: f64, width: f64, carrier: f64) -> (f64, GaussianProbe) {
        let probe = GaussianProbe::optimal(spec, amplitude, width, carrier);
        let ratio = lambda_ratio(spec, &probe.state(spec)).unwrap_or(f64::INFINITY);
        (ratio, probe)
    }
}

/// Carrier wavenumber minimizing the small-amplitude beam ratio
/// `(k⁴ + m²)/(2k²)`, i.e. `k₀ = m^{1/2}`.
pub fn beam_carrier(spec: &ModelSpec) -> f64 {
    spec.w().m_sq.powf(0.25).max(1e-3)
}

/// Polynomial extrapolation to `h = 0` through all given points (Neville).
pub fn extrapolate_to_zero(h: &[f64], y: &[f64]) -> f64 {
    assert_eq!(h.len(), y.len());
    let mut p = y.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

/// Knobs of the `Λ₀` estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lambda0Options {
    /// Geometric scales per family.
    pub scales: usize,
    /// Points used by the extrapolation (taken at the small-`h` end).
    pub extrapolation_points: usize,
    /// Width of the vanishing-amplitude family.
    pub fixed_width: f64,
    /// L² mass of the spreading family.
    pub spread_mass: f64,
}

impl Default for Lambda0Options {
    fn default() -> Self {
        Lambda0Options { scales: 8, extrapolation_points: 4, fixed_width: 1.0, spread_mass: 1e-2 }
    }
}

/// `Λ` along one probe family, against the family parameter `h → 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFamilyReport {
    pub name: String,
    pub h: Vec<f64>,
    pub lambda: Vec<f64>,
    pub extrapolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda0Report {
    pub estimate: f64,
    pub families: Vec<ProbeFamilyReport>,
    /// Always set: the estimator is empirical.
    pub note: String,
}

/// Estimates `Λ₀ = lim inf Λ(u)` as `‖u‖_♯ → 0` from two Gaussian families:
/// fixed width with amplitude `2^{−j}` (vanishing) and widths growing to
/// `L/8` at fixed small mass (spreading). Each family is extrapolated to
/// `h = 0` (`h` = amplitude, resp. inverse width) and the smaller limit wins.
pub fn lambda0_estimate(spec: &ModelSpec, opts: &Lambda0Options) -> Result<Lambda0Report> {
    let grid = spec.grid();
    let h_max = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let l_min = grid.box_length().iter().cloned().fold(f64::INFINITY, f64::min);
    let widest = l_min / 8.0;
    if opts.scales < opts.extrapolation_points || opts.extrapolation_points == 0 {
        return Err(Error::InvalidParameter("need at least as many scales as extrapolation points".into()));
    }
    if opts.fixed_width > widest {
        return Err(Error::ProbeOutOfGrid(format!("probe width {} exceeds L/8 = {widest}", opts.fixed_width)));
    }
    let ratio = (0.5f64).sqrt();
    let narrowest = widest * ratio.powi(opts.scales as i32 - 1);
    if narrowest.min(opts.fixed_width) < 3.0 * h_max {
        return Err(Error::ProbeOutOfGrid(format!(
            "probe width {} is under-resolved at spacing {h_max}",
            narrowest.min(opts.fixed_width)
        )));
    }
    let carrier = beam_carrier(spec);
    let dim = grid.dim() as i32;
    let gauss_mass_unit = std::f64::consts::PI.powf(dim as f64 / 2.0);

    let vanishing: Vec<(f64, f64)> = par::map_range(opts.scales, |j| {
        let amplitude = 0.5f64.powi(j as i32);
        (amplitude, GaussianProbe::evaluate(spec, amplitude, opts.fixed_width, carrier).0)
    });
    let spreading: Vec<(f64, f64)> = par::map_range(opts.scales, |j| {
        let width = widest * ratio.powi((opts.scales - 1 - j) as i32);
        // ∫ (A g_σ)² = A² σ^N π^{N/2}
        let amplitude = (opts.spread_mass / (gauss_mass_unit * width.powi(dim))).sqrt();
        (1.0 / width, GaussianProbe::evaluate(spec, amplitude, width, carrier).0)
    });

    let k = opts.extrapolation_points;
    let family = |name: &str, pts: Vec<(f64, f64)>| {
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tail = &sorted[..k];
        let h: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let y: Vec<f64> = tail.iter().map(|p| p.1).collect();
        ProbeFamilyReport {
            name: name.to_string(),
            h: pts.iter().map(|p| p.0).collect(),
            lambda: pts.iter().map(|p| p.1).collect(),
            extrapolated: extrapolate_to_zero(&h, &y),
        }
    };
    let families = vec![family("vanishing-amplitude", vanishing), family("spreading-width", spreading)];
    let estimate = families.iter().map(|f| f.extrapolated).fold(f64::INFINITY, f64::min);
    if !estimate.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(Lambda0Report {
        estimate,
        families,
        note: "empirical estimate from vanishing and spreading Gaussian probes".into(),
    })
}

/// Knobs of the hylomorphy check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HylomorphyOptions {
    /// Points per axis of the amplitude × width grid.
    pub grid_points: usize,
    pub refinements: usize,
    /// Margin relative to `Λ₀`.
    pub margin_rel: f64,
    pub amplitude_range: (f64, f64),
}

impl Default for HylomorphyOptions {
    fn default() -> Self {
        HylomorphyOptions { grid_points: 40, refinements: 2, margin_rel: 1e-3, amplitude_range: (1e-2, 10.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HylomorphyReport {
    pub lambda0_estimate: f64,
    pub best_ratio: f64,
    pub witness: GaussianProbe,
    pub margin: f64,
    pub verdict: bool,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Minimizes `Λ` over a log grid of Gaussian probes.
pub fn best_gaussian<F>(spec: &ModelSpec, opts: &HylomorphyOptions, objective: F) -> (f64, GaussianProbe)
where
    F: Fn(&GaussianProbe) -> f64 + Sync + Send,
{
    let grid = spec.grid();
    let h_max = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let l_min = grid.box_length().iter().cloned().fold(f64::INFINITY, f64::min);
    let carrier = beam_carrier(spec);
    let n = opts.grid_points.max(2);
    let (mut a_lo, mut a_hi) = opts.amplitude_range;
    let (mut w_lo, mut w_hi) = (3.0 * h_max, l_min / 8.0);
    let mut best = (f64::INFINITY, GaussianProbe { amplitude: a_lo, width: w_hi, velocity: 0.0, carrier });
    for _ in 0..=opts.refinements {
        let amps = log_grid(a_lo, a_hi, n);
        let widths = log_grid(w_lo, w_hi, n);
        let values = par::map_range(n * n, |idx| {
            let probe = GaussianProbe::optimal(spec, amps[idx / n], widths[idx % n], carrier);
            (objective(&probe), probe)
        });
        let (mut bi, mut bj) = (0, 0);
        for (idx, (v, probe)) in values.into_iter().enumerate() {
            if v < best.0 {
                best = (v, probe);
                (bi, bj) = (idx / n, idx % n);
            }
        }
        // zoom onto the neighbouring cells of the current best point
        let (ra, rw) = ((a_hi / a_lo).powf(1.0 / (n - 1) as f64), (w_hi / w_lo).powf(1.0 / (n - 1) as f64));
        let (ca, cw) = (amps[bi], widths[bj]);
        a_lo = (ca / ra).max(opts.amplitude_range.0);
        a_hi = (ca * ra).min(opts.amplitude_range.1);
        w_lo = (cw / rw).max(3.0 * h_max);
        w_hi = (cw * rw).min(l_min / 8.0);
    }
    best
}

/// Condition `inf Λ < Λ₀`, probed over amplitude × width Gaussians (with the
/// optimal `ω` or `c` for the second-order models).
pub fn hylomorphy_check(spec: &ModelSpec, lambda0: f64, opts: &HylomorphyOptions) -> HylomorphyReport {
    let (best_ratio, witness) =
        best_gaussian(spec, opts, |probe| lambda_ratio(spec, &probe.state(spec)).unwrap_or(f64::INFINITY));
    let margin = opts.margin_rel * lambda0.abs();
    HylomorphyReport { lambda0_estimate: lambda0, best_ratio, witness, margin, verdict: best_ratio < lambda0 - margin }
}
