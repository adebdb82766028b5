//! Hylomorphic minimizers: preconditioned descent on `J_δ`, charge-constrained
//! refinement, and the `δ`-continuation family.
//!
//! Both descents use the phase-space metric: search directions are the
//! gradient mapped through the inverse Riesz operator, and all gradient norms
//! are dual norms. Step lengths start from a Barzilai–Borwein guess and are
//! accepted by Armijo backtracking, so every logged objective value is no
//! larger than the previous one.
//!
//! Armijo compares objective values, so it stalls once the predicted decrease
//! falls below their round-off; a run that stalls there with the residual
//! within ten times the tolerance is reported as converged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{orbit_distance, FieldState};
use crate::functionals::{best_gaussian, j_delta, lambda_ratio, phi, HylomorphyOptions, PenaltyParams};
use crate::models::{charge, dual_norm, energy, grad_charge, grad_energy, restore_charge, riesz_inverse, ModelSpec};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    /// Backtracking attempts before the line search gives up.
    pub max_backtracks: usize,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iters: 20_000,
            grad_tol: 1e-8,
            c1: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 60,
            seed: 0,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > 0.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.initial_step > 0.0
            && self.max_backtracks > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid minimizer options {self:?}")))
        }
    }
}

/// One accepted iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    /// Objective after the step: `J_δ` for the penalized descent, `E` for the
    /// constrained one.
    pub objective: f64,
    pub step: f64,
    pub grad_norm: f64,
}

/// Why a descent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIters,
    /// The descent stalled at the round-off floor of the objective with the
    /// residual already within ten times the tolerance: either the line search
    /// failed or accepted steps stopped lowering the objective.
    RoundoffFloor,
    /// No step length gave sufficient decrease away from the floor.
    LineSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub state: FieldState,
    pub e_delta: f64,
    /// `|C|` at the minimizer.
    pub c_delta: f64,
    /// Signed charge at the minimizer.
    pub charge: f64,
    /// `J_δ` at the minimizer (penalized runs only).
    pub j_value: Option<f64>,
    pub lambda_mult: f64,
    pub kkt_residual: f64,
    /// Dual norm of the stationarity residual used by the stopping rule.
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub log: Vec<LogEntry>,
}

impl MinimizeResult {
    pub fn x_norm(&self) -> f64 {
        self.state.x_norm()
    }
}

/// Multiplier-weighted pieces shared by both descents.
struct Stationarity {
    e: f64,
    c: f64,
    g_e: FieldState,
    g_c: FieldState,
}

impl Stationarity {
    fn at(spec: &ModelSpec, x: &FieldState) -> Self {
        Stationarity { e: energy(spec, x), c: charge(spec, x), g_e: grad_energy(spec, x), g_c: grad_charge(spec, x) }
    }

    /// `J_δ` gradient and the multiplier it implies.
    fn penalized(&self, params: &PenaltyParams) -> (FieldState, f64) {
        let t = self.c.abs();
        let sigma = self.c.signum();
        let PenaltyParams { delta, a, s_exp: s } = *params;
        let alpha = 1.0 / t + delta;
        let beta = sigma * (-self.e / (t * t) + 2.0 * a * delta * s * t.powf(s - 1.0));
        let g = self.g_e.scaled(alpha).add_scaled(beta, &self.g_c).expect("same layout");
        (g, -beta / alpha)
    }

    /// Multiplier minimizing the dual norm of `∇E − λ∇C`.
    fn projected_multiplier(&self, pg_c: &FieldState) -> f64 {
        let den = self.g_c.dot(pg_c).expect("same layout");
        if den > 0.0 {
            self.g_e.dot(pg_c).expect("same layout") / den
        } else {
            0.0
        }
    }

    fn kkt(&self, lambda: f64) -> f64 {
        let r = self.g_e.add_scaled(-lambda, &self.g_c).expect("same layout");
        dual_norm(&r) / (1.0 + dual_norm(&self.g_e))
    }
}

/// Barzilai–Borwein step `‖s‖²_X / ⟨s, y⟩`, or `None` when the curvature
/// estimate is unusable.
fn bb_step(s: &FieldState, y: &FieldState) -> Option<f64> {
    let sy = s.dot(y).ok()?;
    let ss = s.x_norm_sq();
    (sy > 0.0 && ss > 0.0 && (ss / sy).is_finite()).then_some(ss / sy)
}

/// Accepted steps without a decrease beyond round-off before a descent that
/// is already within ten times the tolerance is declared stalled.
const STALL_WINDOW: usize = 50;

struct Descent<'a> {
    opts: &'a MinimizeOptions,
    prev: Option<(FieldState, FieldState, f64)>,
    flat_steps: usize,
}

impl<'a> Descent<'a> {
    fn new(opts: &'a MinimizeOptions) -> Self {
        Descent { opts, prev: None, flat_steps: 0 }
    }

    /// Tracks accepted steps that only move the objective by round-off.
    /// Armijo keeps accepting such steps at the floor, so without this the
    /// descent would run to `max_iters`.
    fn stagnated(&mut self, f_old: f64, f_new: f64, res: f64, tol: f64) -> bool {
        let noise = 8.0 * f64::EPSILON * f_old.abs().max(f_new.abs()).max(1.0);
        if res <= 10.0 * tol && f_old - f_new <= noise {
            self.flat_steps += 1;
        } else {
            self.flat_steps = 0;
        }
        self.flat_steps >= STALL_WINDOW
    }

    fn trial_step(&self, x: &FieldState, g: &FieldState) -> f64 {
        match &self.prev {
            None => self.opts.initial_step,
            Some((x_old, g_old, last)) => {
                let s = x.add_scaled(-1.0, x_old).expect("same layout");
                let y = g.add_scaled(-1.0, g_old).expect("same layout");
                bb_step(&s, &y).unwrap_or(2.0 * last)
            }
        }
    }

    /// Armijo backtracking along `d` with slope `slope < 0`.
    fn line_search<F>(&self, f0: f64, slope: f64, mut alpha: f64, eval: F) -> Option<(f64, FieldState, f64)>
    where
        F: Fn(f64) -> Option<(FieldState, f64)>,
    {
        for _ in 0..self.opts.max_backtracks {
            if let Some((x, f)) = eval(alpha) {
                if f.is_finite() && f <= f0 + self.opts.c1 * alpha * slope {
                    return Some((alpha, x, f));
                }
            }
            alpha *= self.opts.backtrack;
        }
        None
    }

    /// Stop reason after a failed line search with residual `res` and
    /// stopping threshold `tol`.
    fn stalled(res: f64, tol: f64) -> StopReason {
        if res <= 10.0 * tol {
            StopReason::RoundoffFloor
        } else {
            StopReason::LineSearch
        }
    }
}

fn check_compatible(spec: &ModelSpec, state: &FieldState) -> Result<()> {
    if state.model() != spec.tag() || state.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    if !state.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Minimizes `J_δ = Λ + δΦ` from `init`.
pub fn minimize_jdelta(
    spec: &ModelSpec,
    params: &PenaltyParams,
    init: &FieldState,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    params.validate()?;
    opts.validate()?;
    check_compatible(spec, init)?;
    let mut x = init.clone();
    let mut j = j_delta(spec, &x, params)?;
    let mut log = Vec::new();
    let mut descent = Descent::new(opts);
    let mut iters = 0;
    let stop = loop {
        let st = Stationarity::at(spec, &x);
        let (g, lambda) = st.penalized(params);
        let residual = st.g_e.add_scaled(-lambda, &st.g_c)?;
        let res_norm = dual_norm(&residual);
        let tol = opts.grad_tol * (1.0 + x.x_norm());
        if res_norm <= tol {
            break StopReason::Converged;
        }
        if iters >= opts.max_iters {
            break StopReason::MaxIters;
        }
        let d = riesz_inverse(&g).scaled(-1.0);
        let slope = g.dot(&d)?;
        let alpha0 = descent.trial_step(&x, &g);
        let found = descent.line_search(j, slope, alpha0, |alpha| {
            let trial = x.add_scaled(alpha, &d).ok()?;
            let jt = j_delta(spec, &trial, params).ok()?;
            Some((trial, jt))
        });
        let Some((alpha, x_new, j_new)) = found else {
            break Descent::stalled(res_norm, tol);
        };
        descent.prev = Some((x.clone(), g, alpha));
        let stalled = descent.stagnated(j, j_new, res_norm, tol);
        x = x_new;
        j = j_new;
        iters += 1;
        log.push(LogEntry { iter: iters, objective: j, step: alpha, grad_norm: res_norm });
        if stalled {
            break StopReason::RoundoffFloor;
        }
    };
    finish(spec, x, Some(j), iters, stop, log, |st| st.penalized(params).1)
}

fn finish<F>(
    spec: &ModelSpec,
    x: FieldState,
    j_value: Option<f64>,
    iters: usize,
    stop: StopReason,
    log: Vec<LogEntry>,
    multiplier: F,
) -> Result<MinimizeResult>
where
    F: Fn(&Stationarity) -> f64,
{
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let st = Stationarity::at(spec, &x);
    let lambda = multiplier(&st);
    let grad_norm = dual_norm(&st.g_e.add_scaled(-lambda, &st.g_c)?);
    Ok(MinimizeResult {
        e_delta: st.e,
        c_delta: st.c.abs(),
        charge: st.c,
        j_value,
        lambda_mult: lambda,
        kkt_residual: st.kkt(lambda),
        grad_norm,
        iters,
        converged: matches!(stop, StopReason::Converged | StopReason::RoundoffFloor),
        stop,
        log,
        state: x,
    })
}

/// Minimizes `E` on the level set `C = c_target` by projected gradient
/// descent with charge restoration after every trial step.
pub fn refine_constrained(
    spec: &ModelSpec,
    c_target: f64,
    init: &FieldState,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    opts.validate()?;
    check_compatible(spec, init)?;
    let c0 = charge(spec, init);
    if !((c0 - c_target).abs() <= 0.2 * c_target.abs()) {
        return Err(Error::InvalidParameter(format!(
            "initial charge {c0} is not within 20% of the target {c_target}"
        )));
    }
    let mut x = if c0 == c_target { init.clone() } else { restore_charge(spec, init, c_target)? };
    let mut e = energy(spec, &x);
    let mut log = Vec::new();
    let mut descent = Descent::new(opts);
    let mut iters = 0;
    let stop = loop {
        let st = Stationarity::at(spec, &x);
        let pg_c = riesz_inverse(&st.g_c);
        let lambda = st.projected_multiplier(&pg_c);
        let g_perp = st.g_e.add_scaled(-lambda, &st.g_c)?;
        let res_norm = dual_norm(&g_perp);
        let tol = opts.grad_tol * (1.0 + x.x_norm());
        if res_norm <= tol {
            break StopReason::Converged;
        }
        if iters >= opts.max_iters {
            break StopReason::MaxIters;
        }
        let d = riesz_inverse(&g_perp).scaled(-1.0);
        let slope = g_perp.dot(&d)?;
        let alpha0 = descent.trial_step(&x, &g_perp);
        let found = descent.line_search(e, slope, alpha0, |alpha| {
            let moved = x.add_scaled(alpha, &d).ok()?;
            let trial = restore_charge(spec, &moved, c_target).ok()?;
            let et = energy(spec, &trial);
            Some((trial, et))
        });
        let Some((alpha, x_new, e_new)) = found else {
            break Descent::stalled(res_norm, tol);
        };
        descent.prev = Some((x.clone(), g_perp, alpha));
        let stalled = descent.stagnated(e, e_new, res_norm, tol);
        x = x_new;
        e = e_new;
        iters += 1;
        log.push(LogEntry { iter: iters, objective: e, step: alpha, grad_norm: res_norm });
        if stalled {
            break StopReason::RoundoffFloor;
        }
    };
    finish(spec, x, None, iters, stop, log, |st| st.projected_multiplier(&riesz_inverse(&st.g_c)))
}

/// Gaussian probe minimizing `J_δ`, used as the default starting point.
pub fn default_init(spec: &ModelSpec, params: &PenaltyParams) -> Result<FieldState> {
    let opts = HylomorphyOptions { grid_points: 24, refinements: 1, ..HylomorphyOptions::default() };
    let (value, probe) =
        best_gaussian(spec, &opts, |probe| j_delta(spec, &probe.state(spec), params).unwrap_or(f64::INFINITY));
    if !value.is_finite() {
        return Err(Error::Minimization("no Gaussian probe has a finite J_delta".into()));
    }
    Ok(probe.state(spec))
}

/// Largest `δ` for which some Gaussian probe satisfies `J_δ < Λ₀`:
/// `sup (Λ₀ − Λ(w))/Φ(w)` over probes with `Λ(w) < Λ₀` (infinite if one of
/// them has `Φ ≤ 0`).
pub fn delta_bar(spec: &ModelSpec, params: &PenaltyParams, lambda0: f64) -> f64 {
    let opts = HylomorphyOptions::default();
    let (neg, _) = best_gaussian(spec, &opts, |probe| {
        let state = probe.state(spec);
        let Ok(lam) = lambda_ratio(spec, &state) else {
            return f64::INFINITY;
        };
        if lam >= lambda0 {
            return f64::INFINITY;
        }
        let p = phi(spec, &state, params);
        if p <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -(lambda0 - lam) / p
        }
    });
    if neg.is_finite() {
        -neg
    } else if neg == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        0.0
    }
}

/// One member of the continuation family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationMember {
    pub delta: f64,
    pub penalized: MinimizeResult,
    pub refined: MinimizeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationResult {
    pub members: Vec<ContinuationMember>,
    /// Pairwise orbit distances between the refined members.
    pub orbit_distances: Vec<Vec<f64>>,
    pub delta_bar: f64,
}

/// Warm-started chain over a decreasing list of `δ`: each penalized minimum
/// seeds the next, and each is sharpened by a constrained refinement at its
/// own charge.
pub fn delta_continuation(
    spec: &ModelSpec,
    params: &PenaltyParams,
    deltas: &[f64],
    lambda0: f64,
    init: Option<&FieldState>,
    opts: &MinimizeOptions,
) -> Result<ContinuationResult> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("empty delta list".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("delta list must be positive and strictly decreasing".into()));
    }
    let first = params.with_delta(deltas[0])?;
    let bar = delta_bar(spec, &first, lambda0);
    if deltas[0] >= bar {
        return Err(Error::InvalidParameter(format!(
            "delta {} is not below delta_bar = {bar} (no probe with J_delta < Lambda_0)",
            deltas[0]
        )));
    }
    let mut start = match init {
        Some(s) => s.clone(),
        None => default_init(spec, &first)?,
    };
    let mut members = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let p = params.with_delta(delta)?;
        let penalized = minimize_jdelta(spec, &p, &start, opts)?;
        if !penalized.converged {
            return Err(Error::Minimization(format!(
                "penalized descent at delta = {delta} stopped ({:?}) with residual {:e}",
                penalized.stop, penalized.grad_norm
            )));
        }
        let refined = refine_constrained(spec, penalized.charge, &penalized.state, opts)?;
        if !refined.converged {
            return Err(Error::Minimization(format!(
                "constrained refinement at delta = {delta} stopped ({:?}) with residual {:e}",
                refined.stop, refined.grad_norm
            )));
        }
        start = penalized.state.clone();
        members.push(ContinuationMember { delta, penalized, refined });
    }
    let n = members.len();
    let flat = par::map_range(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        if i < j {
            orbit_distance(&members[i].refined.state, &members[j].refined.state).unwrap_or(f64::NAN)
        } else {
            0.0
        }
    });
    let mut orbit_distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            orbit_distances[i][j] = flat[i * n + j];
            orbit_distances[j][i] = flat[i * n + j];
        }
    }
    Ok(ContinuationResult { members, orbit_distances, delta_bar: bar })
}
