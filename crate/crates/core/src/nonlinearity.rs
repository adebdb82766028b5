//! The potential `W(s) = ½ m² s² + N(s)` as a small set of parametric families,
//! with analytic derivatives and the per-model condition checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verdict::{verdict_of, EvidenceKind, Finding, Verdict};

/// Nonlinear part of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `N(s) = -(b/p) s^p`. Negative `b` gives the defocusing variant.
    SinglePower { b: f64, p: f64 },
    /// `N(s) = -(b/p) s^p + (c/q) s^q` with `q > p`.
    DoublePower { b: f64, p: f64, c: f64, q: f64 },
    /// `W(s) = M̄ (1 - exp(-m² s² / (2 M̄)))`; `alpha` is the growth exponent
    /// advertised for the beam hylomorphy condition.
    Saturating { alpha: f64, m_bar: f64 },
}

/// `W(s) = ½ m_sq s² + N(s)`, evaluated at `s = |ψ| ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WSpec {
    pub m_sq: f64,
    pub family: Family,
}

impl WSpec {
    pub fn new(m_sq: f64, family: Family) -> Result<Self> {
        let spec = WSpec { m_sq, family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single_power(m_sq: f64, b: f64, p: f64) -> Result<Self> {
        WSpec::new(m_sq, Family::SinglePower { b, p })
    }

    pub fn double_power(m_sq: f64, b: f64, p: f64, c: f64, q: f64) -> Result<Self> {
        WSpec::new(m_sq, Family::DoublePower { b, p, c, q })
    }

    pub fn saturating(m_sq: f64, alpha: f64, m_bar: f64) -> Result<Self> {
        WSpec::new(m_sq, Family::Saturating { alpha, m_bar })
    }

    /// Purely quadratic potential `½ m² s²`.
    pub fn quadratic(m_sq: f64) -> Result<Self> {
        WSpec::single_power(m_sq, 0.0, 4.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.m_sq.is_finite() && self.m_sq >= 0.0) {
            return bad(format!("m_sq = {} must be finite and >= 0", self.m_sq));
        }
        match self.family {
            Family::SinglePower { b, p } => {
                if !b.is_finite() || !(p.is_finite() && p > 2.0) {
                    return bad(format!("single power needs finite b and p > 2 (b = {b}, p = {p})"));
                }
            }
            Family::DoublePower { b, p, c, q } => {
                if !(b.is_finite() && b >= 0.0) || !(c.is_finite() && c >= 0.0) {
                    return bad(format!("double power needs b >= 0, c >= 0 (b = {b}, c = {c})"));
                }
                if !(p.is_finite() && p > 2.0 && q.is_finite() && q > p) {
                    return bad(format!("double power needs 2 < p < q (p = {p}, q = {q})"));
                }
            }
            Family::Saturating { alpha, m_bar } => {
                if !(alpha.is_finite() && (0.0..2.0).contains(&alpha)) {
                    return bad(format!("saturating alpha = {alpha} must lie in [0, 2)"));
                }
                if !(m_bar.is_finite() && m_bar > 0.0) {
                    return bad(format!("saturating m_bar = {m_bar} must be > 0"));
                }
            }
        }
        Ok(())
    }

    fn kappa(&self, m_bar: f64) -> f64 {
        self.m_sq / (2.0 * m_bar)
    }

    /// `W(s)`.
    pub fn w(&self, s: f64) -> f64 {
        match self.family {
            Family::Saturating { m_bar, .. } => -m_bar * (-self.kappa(m_bar) * s * s).exp_m1(),
            _ => 0.5 * self.m_sq * s * s + self.n(s),
        }
    }

    /// `W'(s)`.
    pub fn w1(&self, s: f64) -> f64 {
        s * self.w1_over_s(s)
    }

    /// `W''(s)`.
    pub fn w2(&self, s: f64) -> f64 {
        match self.family {
            Family::SinglePower { b, p } => self.m_sq - b * (p - 1.0) * s.powf(p - 2.0),
            Family::DoublePower { b, p, c, q } => {
                self.m_sq - b * (p - 1.0) * s.powf(p - 2.0) + c * (q - 1.0) * s.powf(q - 2.0)
            }
            Family::Saturating { m_bar, .. } => {
                let k = self.kappa(m_bar);
                self.m_sq * (-k * s * s).exp() * (1.0 - 2.0 * k * s * s)
            }
        }
    }

    /// `W'(s)/s`, extended continuously to `s = 0` where it equals `m²`.
    pub fn w1_over_s(&self, s: f64) -> f64 {
        match self.family {
            Family::SinglePower { b, p } => self.m_sq - b * s.powf(p - 2.0),
            Family::DoublePower { b, p, c, q } => self.m_sq - b * s.powf(p - 2.0) + c * s.powf(q - 2.0),
            Family::Saturating { m_bar, .. } => self.m_sq * (-self.kappa(m_bar) * s * s).exp(),
        }
    }

    /// Nonlinear part `N(s) = W(s) - ½ m² s²`.
    pub fn n(&self, s: f64) -> f64 {
        match self.family {
            Family::SinglePower { b, p } => -(b / p) * s.powf(p),
            Family::DoublePower { b, p, c, q } => -(b / p) * s.powf(p) + (c / q) * s.powf(q),
            Family::Saturating { .. } => self.w(s) - 0.5 * self.m_sq * s * s,
        }
    }

    /// `N'(s)`.
    pub fn n1(&self, s: f64) -> f64 {
        match self.family {
            Family::SinglePower { b, p } => -b * s.powf(p - 1.0),
            Family::DoublePower { b, p, c, q } => -b * s.powf(p - 1.0) + c * s.powf(q - 1.0),
            Family::Saturating { m_bar, .. } => self.m_sq * s * (-self.kappa(m_bar) * s * s).exp_m1(),
        }
    }

    /// `(W, W', W'')` at `s ≥ 0`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64, f64)> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeArgument(s));
        }
        Ok((self.w(s), self.w1(s), self.w2(s)))
    }

    /// Exponent and coefficient of the leading focusing term, if any:
    /// `N(s) ≥ -coef · s^p` for the power families.
    pub fn focusing_term(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::SinglePower { b, p } | Family::DoublePower { b, p, .. } if b > 0.0 => Some((b / p, p)),
            _ => None,
        }
    }
}

/// Which existence theorem the conditions are checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TheoremId {
    Nse,
    Nwe,
    Nbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRange {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
}

impl Default for SampleRange {
    fn default() -> Self {
        SampleRange { s_min: 1e-6, s_max: 1e3, points: 400 }
    }
}

impl SampleRange {
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi) = (self.s_min.ln(), self.s_max.ln());
        let n = self.points.max(2);
        (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WConditionReport {
    pub theorem: TheoremId,
    pub dim: usize,
    pub sample_range: SampleRange,
    pub conditions: Vec<Finding>,
}

impl WConditionReport {
    pub fn get(&self, id: &str) -> Option<&Finding> {
        self.conditions.iter().find(|c| c.id == id)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict == Verdict::Pass)
    }
}

/// Sobolev critical exponent `2* = 2N/(N-2)` (infinite for N ≤ 2).
pub fn critical_sobolev(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    }
}

/// Mass-critical exponent `2 + 4/N`.
pub fn mass_critical(dim: usize) -> f64 {
    2.0 + 4.0 / dim as f64
}

/// Checks the hypotheses that the chosen existence theorem places on `W`.
pub fn check_w_conditions(spec: &WSpec, theorem: TheoremId, dim: usize) -> WConditionReport {
    let range = SampleRange::default();
    let samples = range.points();
    let conditions = match theorem {
        TheoremId::Nse => vec![
            growth_fp(spec, dim),
            lower_bound_f0(spec, dim),
            hylomorphy_witness(spec, "hylomorphy", &samples),
        ],
        TheoremId::Nwe => vec![
            positivity_nwe(spec, &samples),
            nondegeneracy(spec, "W-ii"),
            hylomorphy_witness(spec, "W-iii", &samples),
            growth_nwe(spec, dim),
        ],
        TheoremId::Nbe => vec![
            positivity_nbe(spec, &samples),
            nondegeneracy(spec, "W-ii"),
            hylomorphy_nbe(spec, &samples),
        ],
    };
    WConditionReport { theorem, dim, sample_range: range, conditions }
}

/// (Fp): `|N'(s)| ≤ c1 s^(q-1) + c2 s^(p-1)` for some `2 < q ≤ p < 2*`.
/// The exponents are reported as `growth_q`, `growth_p`.
fn growth_fp(spec: &WSpec, dim: usize) -> Finding {
    let crit = critical_sobolev(dim);
    let (q, p) = match spec.family {
        Family::SinglePower { p, .. } => (p, p),
        Family::DoublePower { b, p, c, q } => {
            let lo = if b != 0.0 { p } else { q };
            let hi = if c > 0.0 { q } else { p };
            (lo, hi)
        }
        // |N'| ≤ m² κ s³ near 0 and ≤ m² s far out, both dominated by s³.
        Family::Saturating { .. } => (4.0, 4.0),
    };
    let ok = q > 2.0 && p < crit;
    Finding::new(
        "Fp",
        verdict_of(ok),
        EvidenceKind::Analytic,
        format!("growth exponents q = {q}, p = {p} against 2* = {crit}"),
    )
    .with("growth_q", q)
    .with("growth_p", p)
    .with("critical", crit)
}

/// (F0): `N(s) ≥ -c1 s² - c2 s^γ` with `γ < 2 + 4/N`.
fn lower_bound_f0(spec: &WSpec, dim: usize) -> Finding {
    let bound = mass_critical(dim);
    let (ok, gamma, note) = match spec.family {
        Family::SinglePower { b, p } if b > 0.0 => (p < bound, p, "gamma = p"),
        Family::DoublePower { b, p, c, .. } if b > 0.0 && c == 0.0 => (p < bound, p, "gamma = p"),
        Family::DoublePower { b, .. } if b > 0.0 => {
            (true, 2.0, "defocusing top power bounds N below by -c1 s^2")
        }
        Family::Saturating { .. } => (true, 2.0, "N >= -m^2 s^2 / 2"),
        _ => (true, 2.0, "N >= 0"),
    };
    let f = Finding::new(
        "F0",
        verdict_of(ok),
        EvidenceKind::Analytic,
        format!("{note}; gamma = {gamma} against 2 + 4/N = {bound}"),
    )
    .with("gamma", gamma)
    .with("bound", bound);
    if ok {
        f
    } else {
        f.with_counterexample(format!("focusing exponent p = {gamma} >= {bound}"))
    }
}

/// `∃ s0 > 0 : N(s0) < 0`.
fn hylomorphy_witness(spec: &WSpec, id: &str, samples: &[f64]) -> Finding {
    let analytic = match spec.family {
        Family::SinglePower { b, .. } => Some(b > 0.0),
        Family::DoublePower { b, .. } => Some(b > 0.0),
        Family::Saturating { .. } => Some(spec.m_sq > 0.0),
    };
    let mut candidates = vec![2.0, 1.0, 0.5];
    if let Family::DoublePower { b, p, c, q } = spec.family {
        if b > 0.0 && c > 0.0 {
            candidates.push(0.5 * ((b * q) / (c * p)).powf(1.0 / (q - p)));
        }
    }
    let witness = candidates
        .into_iter()
        .chain(samples.iter().copied())
        .find(|&s| spec.n(s) < 0.0);
    match (analytic, witness) {
        (Some(true), Some(s0)) | (None, Some(s0)) => Finding::new(
            id,
            Verdict::Pass,
            if analytic.is_some() { EvidenceKind::Analytic } else { EvidenceKind::Sampled },
            format!("N({s0}) = {} < 0", spec.n(s0)),
        )
        .with("s0", s0)
        .with("n_at_s0", spec.n(s0)),
        _ => Finding::new(id, Verdict::Fail, EvidenceKind::Analytic, "N(s) >= 0 for every s > 0")
            .with_counterexample("no s0 with N(s0) < 0"),
    }
}

fn nondegeneracy(spec: &WSpec, id: &str) -> Finding {
    Finding::new(
        id,
        verdict_of(spec.m_sq > 0.0),
        EvidenceKind::Analytic,
        format!("W''(0) = m^2 = {}", spec.m_sq),
    )
    .with("m_sq", spec.m_sq)
}

fn sampled_min_w(spec: &WSpec, samples: &[f64]) -> (f64, f64) {
    samples
        .iter()
        .map(|&s| (s, spec.w(s)))
        .fold((0.0, 0.0), |acc, (s, w)| if w < acc.1 { (s, w) } else { acc })
}

/// NWE (W-i): `W(s) ≥ 0`.
fn positivity_nwe(spec: &WSpec, samples: &[f64]) -> Finding {
    let id = "W-i";
    match spec.family {
        Family::SinglePower { b, p } if b > 0.0 => {
            let s = if spec.m_sq > 0.0 { 2.0 * (p * spec.m_sq / (2.0 * b)).powf(1.0 / (p - 2.0)) } else { 1.0 };
            Finding::new(id, Verdict::Fail, EvidenceKind::Analytic, "focusing power makes W negative at large s")
                .with("s_witness", s)
                .with("w_at_witness", spec.w(s))
                .with_counterexample(format!("W({s}) = {} < 0", spec.w(s)))
        }
        Family::SinglePower { .. } | Family::Saturating { .. } => {
            Finding::new(id, Verdict::Pass, EvidenceKind::Analytic, "W is a sum of nonnegative terms")
        }
        Family::DoublePower { .. } => {
            let (s, w) = sampled_min_w(spec, samples);
            let f = Finding::new(id, verdict_of(w >= 0.0), EvidenceKind::Sampled, format!("min sampled W = {w}"))
                .with("min_w", w);
            if w < 0.0 {
                f.with("s_witness", s).with_counterexample(format!("W({s}) = {w} < 0"))
            } else {
                f
            }
        }
    }
}

/// NWE (W-iiii): `N'(s) ≥ -c1 s - c2 s^(p-1)` with `2 < p < 2*`.
fn growth_nwe(spec: &WSpec, dim: usize) -> Finding {
    let crit = critical_sobolev(dim);
    let (ok, p, note) = match spec.family {
        Family::SinglePower { b, p } | Family::DoublePower { b, p, .. } if b > 0.0 => {
            (p < crit, p, "N' >= -b s^(p-1)")
        }
        Family::Saturating { .. } => (true, 2.0, "N' >= -m^2 s"),
        _ => (true, 2.0, "N' >= 0"),
    };
    Finding::new("W-iiii", verdict_of(ok), EvidenceKind::Analytic, format!("{note}; 2* = {crit}"))
        .with("growth_p", p)
        .with("critical", crit)
}

/// NBE (W-i): `W(s) > 0` for `s ≠ 0` and `W(s) ≥ w_floor` for `|s| ≥ 1`.
fn positivity_nbe(spec: &WSpec, samples: &[f64]) -> Finding {
    let id = "W-i";
    if spec.m_sq <= 0.0 && !matches!(spec.family, Family::DoublePower { c, .. } if c > 0.0) {
        return Finding::new(id, Verdict::Fail, EvidenceKind::Analytic, "W vanishes identically near 0 without a mass term")
            .with_counterexample("W(s) <= 0 for small s > 0");
    }
    match spec.family {
        Family::SinglePower { b, .. } if b > 0.0 => positivity_nwe(spec, samples),
        Family::SinglePower { .. } | Family::Saturating { .. } => {
            let floor = spec.w(1.0);
            Finding::new(id, Verdict::Pass, EvidenceKind::Analytic, "W is positive and increasing in s")
                .with("w_floor", floor)
        }
        Family::DoublePower { .. } => {
            let positive = samples.iter().all(|&s| spec.w(s) > 0.0);
            let floor = samples
                .iter()
                .filter(|&&s| s >= 1.0)
                .map(|&s| spec.w(s))
                .chain(std::iter::once(spec.w(1.0)))
                .fold(f64::INFINITY, f64::min);
            let ok = positive && floor > 0.0;
            let f = Finding::new(id, verdict_of(ok), EvidenceKind::Sampled, format!("sampled floor on |s| >= 1: {floor}"))
                .with("w_floor", floor);
            if ok {
                f
            } else {
                let (s, w) = sampled_min_w(spec, samples);
                f.with_counterexample(format!("W({s}) = {w}"))
            }
        }
    }
}

/// NBE (W-iii): `W(s) ≤ M s^α` for some `M > 0`, `α ∈ [0, 2)`.
fn hylomorphy_nbe(spec: &WSpec, samples: &[f64]) -> Finding {
    let id = "W-iii";
    match spec.family {
        Family::Saturating { alpha, m_bar } => {
            // W ≤ min(m² s²/2, M̄) ≤ M̄^(1-α/2) (m²/2)^(α/2) s^α.
            let m = m_bar.powf(1.0 - 0.5 * alpha) * (0.5 * spec.m_sq).powf(0.5 * alpha);
            let m = if alpha == 0.0 { m_bar } else { m };
            Finding::new(id, Verdict::Pass, EvidenceKind::Analytic, "saturating family is bounded by its plateau")
                .with("alpha", alpha)
                .with("M", m)
        }
        Family::SinglePower { b, p } if b > 0.0 => {
            let s_star = if spec.m_sq > 0.0 { (spec.m_sq / b).powf(1.0 / (p - 2.0)) } else { 0.0 };
            let m = spec.w(s_star).max(f64::MIN_POSITIVE);
            Finding::new(id, Verdict::Pass, EvidenceKind::Analytic, "W is bounded above by its maximum")
                .with("alpha", 0.0)
                .with("M", m)
        }
        Family::SinglePower { b, .. } if b == 0.0 && spec.m_sq == 0.0 => {
            Finding::new(id, Verdict::Pass, EvidenceKind::Analytic, "W vanishes identically")
                .with("alpha", 0.0)
                .with("M", f64::MIN_POSITIVE)
        }
        _ => {
            let s = *samples.last().unwrap_or(&1e3);
            Finding::new(id, Verdict::Fail, EvidenceKind::Analytic, "W grows at least quadratically")
                .with_counterexample(format!("W({s}) / s^2 = {}", spec.w(s) / (s * s)))
        }
    }
}
