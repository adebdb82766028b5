use std::fmt::Write as _;
use std::path::Path;

use hylosolve_core::checkers::{audit, HypothesisCertificate};
use hylosolve_core::dynamics::{conservation_report, evolve, Reference};
use hylosolve_core::functionals::{choose_coercivity_params, lambda0_estimate, PenaltyParams, NASH_SAMPLES};
use hylosolve_core::io::{fmt17, read_field, write_field, write_trace};
use hylosolve_core::minimizer::{default_init, delta_continuation, minimize_jdelta, refine_constrained, ContinuationResult};
use hylosolve_core::stability::{run_stability, v_separation_scan, StabilityOptions};
use hylosolve_core::{orbit_alignment, Error, Family, FieldState, ModelSpec, ModelTag};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::{CertificateSummary, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Internal,
    Config,
    Numerical,
    Gate,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Internal => 1,
            FailureKind::Config => 2,
            FailureKind::Numerical => 3,
            FailureKind::Gate => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub stage: String,
    pub message: String,
}

impl Failure {
    pub fn new(kind: FailureKind, stage: &str, message: impl Into<String>) -> Self {
        Failure { kind, stage: stage.into(), message: message.into() }
    }

    fn from_core(stage: &str, e: Error) -> Self {
        let kind = match e {
            Error::InvalidParameter(_)
            | Error::InvalidGrid(_)
            | Error::ProbeOutOfGrid(_)
            | Error::GridMismatch
            | Error::FieldFormat(_) => FailureKind::Config,
            Error::Supercritical { .. } => FailureKind::Gate,
            Error::Io(_) | Error::Json(_) => FailureKind::Internal,
            _ => FailureKind::Numerical,
        };
        Failure::new(kind, stage, e.to_string())
    }

    fn io(stage: &str, e: std::io::Error) -> Self {
        Failure::new(FailureKind::Internal, stage, e.to_string())
    }
}

pub type Outcome = Result<(), Failure>;

pub struct Run {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: Outputs,
    pub quiet: bool,
    pub certificate: Option<CertificateSummary>,
}

impl Run {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn json<T: Serialize>(&mut self, stage: &str, rel: &str, value: &T) -> Outcome {
        self.out.write_json(stage, rel, value).map_err(|e| Failure::io(stage, e))
    }

    fn field(&mut self, stage: &str, rel: &str, state: &FieldState) -> Outcome {
        self.out.write_with(stage, rel, |w| write_field(state, w)).map_err(|e| Failure::io(stage, e))
    }

    fn explicit_params(&self) -> Option<PenaltyParams> {
        let p = &self.cfg.penalty;
        match (p.a.value(), p.s.value()) {
            (Some(a), Some(s)) => PenaltyParams::new(p.delta.first().copied().unwrap_or(1.0), a, s).ok(),
            _ => None,
        }
    }

    fn certify(&mut self, spec: &ModelSpec, rel: &str) -> Result<HypothesisCertificate, Failure> {
        self.say(format!("auditing hypotheses (budget {})", self.cfg.audit.budget));
        let params = self.explicit_params();
        let cert = audit(spec, params.as_ref(), self.cfg.audit.budget, self.seed);
        self.json("check", rel, &cert)?;
        Ok(cert)
    }

    /// Runs the audit and refuses to continue unless the gating hypotheses pass.
    fn gate(&mut self, spec: &ModelSpec) -> Outcome {
        let cert = self.certify(spec, "certificate.json")?;
        let summary = summarize(&cert);
        let passed = summary.gate_passed;
        let failed = summary.failed.join(", ");
        self.certificate = Some(summary);
        if passed {
            Ok(())
        } else {
            Err(Failure::new(FailureKind::Gate, "check", format!("hypothesis gate failed: [{failed}]")))
        }
    }

    fn penalty(&self, spec: &ModelSpec, delta: f64) -> Result<PenaltyParams, Failure> {
        let p = &self.cfg.penalty;
        let (a, s) = match (p.a.value(), p.s.value()) {
            (Some(a), Some(s)) => (a, s),
            (a, s) => {
                let c = choose_coercivity_params(spec, self.cfg.audit.budget.clamp(1, NASH_SAMPLES), self.seed)
                    .map_err(|e| Failure::from_core("coercivity", e))?;
                (a.unwrap_or(c.a), s.unwrap_or(c.s_exp))
            }
        };
        PenaltyParams::new(delta, a, s).map_err(|e| Failure::from_core("coercivity", e))
    }

    fn deltas(&self) -> Result<Vec<f64>, Failure> {
        if self.cfg.penalty.delta.is_empty() {
            return Err(Failure::new(FailureKind::Config, "config", "penalty.delta is empty"));
        }
        Ok(self.cfg.penalty.delta.clone())
    }

    fn lambda0(&mut self, spec: &ModelSpec) -> Result<f64, Failure> {
        let rep = lambda0_estimate(spec, &self.cfg.lambda0).map_err(|e| Failure::from_core("lambda0", e))?;
        self.say(format!("Λ₀ ≈ {:.6}", rep.estimate));
        self.json("lambda0", "lambda0.json", &rep)?;
        Ok(rep.estimate)
    }

    fn continuation(&mut self, spec: &ModelSpec, deltas: &[f64]) -> Result<ContinuationResult, Failure> {
        let lambda0 = self.lambda0(spec)?;
        let params = self.penalty(spec, deltas[0])?;
        self.say(format!("minimizing J_δ for δ in {deltas:?} (a = {:.6e}, s = {})", params.a, params.s_exp));
        let fam = delta_continuation(spec, &params, deltas, lambda0, None, &self.cfg.minimize)
            .map_err(|e| Failure::from_core("minimize", e))?;
        self.json("minimize", "minimize.json", &fam)?;
        for (i, m) in fam.members.iter().enumerate() {
            self.field("minimize", &format!("fields/member_{i}.field.csv"), &m.refined.state)?;
        }
        Ok(fam)
    }
}

pub fn summarize(cert: &HypothesisCertificate) -> CertificateSummary {
    CertificateSummary {
        gate_passed: cert.gate_passed(),
        failed: cert.failed_ids().into_iter().map(String::from).collect(),
    }
}

pub fn check(run: &mut Run) -> Outcome {
    let spec = run.cfg.model.clone();
    run.gate(&spec)
}

pub fn lambda0(run: &mut Run) -> Outcome {
    let spec = run.cfg.model.clone();
    run.lambda0(&spec).map(|_| ())
}

pub fn minimize(run: &mut Run) -> Outcome {
    let spec = run.cfg.model.clone();
    run.gate(&spec)?;
    let deltas = run.deltas()?;
    run.continuation(&spec, &deltas).map(|_| ())
}

#[derive(Serialize)]
struct EvolveSummary {
    steps: usize,
    dt: f64,
    blow_up: bool,
    energy_drift: f64,
    charge_drift: f64,
    samples: usize,
}

pub fn evolve_cmd(run: &mut Run, init: Option<&Path>) -> Outcome {
    let spec = run.cfg.model.clone();
    let start = match init {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| Failure::new(FailureKind::Config, "evolve", format!("{}: {e}", path.display())))?;
            read_field(file, Some((spec.tag(), spec.grid()))).map_err(|e| Failure::from_core("evolve", e))?
        }
        None => {
            run.gate(&spec)?;
            let deltas = run.deltas()?;
            let fam = run.continuation(&spec, &deltas[..1])?;
            fam.members[0].refined.state.clone()
        }
    };
    let reference = Reference::at(&spec, &start);
    run.say(format!("evolving to T = {} with dt = {}", run.cfg.evolve.t_final, run.cfg.evolve.dt));
    let trace = evolve(&spec, &start, &run.cfg.evolve, Some(&reference)).map_err(|e| Failure::from_core("evolve", e))?;
    let cons = conservation_report(&trace);
    run.out.write_with("evolve", "trace.csv", |w| write_trace(&trace, w)).map_err(|e| Failure::io("evolve", e))?;
    run.field("evolve", "final.field.csv", &trace.final_state)?;
    let summary = EvolveSummary {
        steps: trace.steps,
        dt: trace.dt,
        blow_up: trace.blow_up,
        energy_drift: cons.energy_drift,
        charge_drift: cons.charge_drift,
        samples: trace.samples.len(),
    };
    run.json("evolve", "evolve.json", &summary)?;
    if trace.blow_up {
        return Err(Failure::new(FailureKind::Numerical, "evolve", format!("blow-up detected after {} steps", trace.steps)));
    }
    Ok(())
}

pub fn stability(run: &mut Run) -> Outcome {
    let spec = run.cfg.model.clone();
    run.gate(&spec)?;
    let deltas = run.deltas()?;
    let fam = run.continuation(&spec, &deltas[..1])?;
    let result = &fam.members[0].refined;
    let block = run.cfg.stability.clone();
    let opts = StabilityOptions { evolve: run.cfg.evolve, kappa: block.kappa, abs_tol: block.abs_tol };
    if !block.perturbations.is_empty() {
        run.say(format!("running {} perturbed evolutions", block.perturbations.len()));
        let report =
            run_stability(&spec, result, &block.perturbations, &opts).map_err(|e| Failure::from_core("stability", e))?;
        run.json("stability", "stability.json", &report)?;
        for (i, trace) in report.traces.iter().enumerate() {
            run.out
                .write_with("stability", &format!("traces/run_{i}.csv"), |w| write_trace(trace, w))
                .map_err(|e| Failure::io("stability", e))?;
        }
    }
    if !block.scan_radii.is_empty() {
        let rows = v_separation_scan(&spec, result, &block.scan_radii, block.scan_directions, run.seed)
            .map_err(|e| Failure::from_core("stability", e))?;
        let mut csv = String::from("radius,min_V,max_V\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{}", fmt17(r.radius), fmt17(r.min_v), fmt17(r.max_v));
        }
        run.out.write_bytes("stability", "vscan.csv", csv.as_bytes()).map_err(|e| Failure::io("stability", e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    w_index: usize,
    delta: f64,
    gate_passed: bool,
    status: String,
    energy: Option<f64>,
    charge: Option<f64>,
    lambda_mult: Option<f64>,
    kkt_residual: Option<f64>,
    iters: Option<usize>,
}

pub fn sweep(run: &mut Run) -> Outcome {
    let deltas = run.deltas()?;
    let ws = if run.cfg.sweep.w.is_empty() { vec![*run.cfg.model.w()] } else { run.cfg.sweep.w.clone() };
    let base = run.cfg.model.clone();
    let specs: Vec<ModelSpec> = ws
        .iter()
        .map(|w| ModelSpec::new(base.tag(), base.grid().clone(), *w))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::from_core("sweep", e))?;
    let (budget, seed) = (run.cfg.audit.budget, run.seed);
    run.say(format!("sweeping {} potentials × {} deltas", specs.len(), deltas.len()));
    let certs = hylosolve_core::par::map_slice(&specs, |s| audit(s, None, budget, seed));
    let lambda0s = hylosolve_core::par::map_slice(&specs, |s| lambda0_estimate(s, &run.cfg.lambda0).map(|r| r.estimate));
    let combos: Vec<(usize, f64)> = (0..specs.len()).flat_map(|i| deltas.iter().map(move |&d| (i, d))).collect();
    let results = hylosolve_core::par::map_slice(&combos, |&(i, delta)| {
        if !certs[i].gate_passed() {
            return Err("hypothesis gate failed".to_string());
        }
        let lambda0 = lambda0s[i].as_ref().map_err(|e| e.to_string())?;
        let params = run.penalty(&specs[i], delta).map_err(|f| f.message)?;
        let init = default_init(&specs[i], &params).map_err(|e| e.to_string())?;
        let bar = hylosolve_core::minimizer::delta_bar(&specs[i], &params, *lambda0);
        if delta >= bar {
            return Err(format!("delta {delta} is not below delta_bar {bar}"));
        }
        let pen = minimize_jdelta(&specs[i], &params, &init, &run.cfg.minimize).map_err(|e| e.to_string())?;
        if !pen.converged {
            return Err(format!("penalized descent stopped: {:?}", pen.stop));
        }
        let refined = refine_constrained(&specs[i], pen.charge, &pen.state, &run.cfg.minimize).map_err(|e| e.to_string())?;
        if !refined.converged {
            return Err(format!("refinement stopped: {:?}", refined.stop));
        }
        Ok(refined)
    });
    let mut rows = Vec::new();
    for (i, c) in certs.iter().enumerate() {
        run.json("sweep", &format!("runs/w{i}/certificate.json"), c)?;
    }
    for (k, (&(i, delta), res)) in combos.iter().zip(&results).enumerate() {
        let dir = format!("runs/w{i}/d{}", k % deltas.len());
        let gate_passed = certs[i].gate_passed();
        rows.push(match res {
            Ok(r) => {
                run.json("sweep", &format!("{dir}/result.json"), r)?;
                run.field("sweep", &format!("{dir}/minimizer.field.csv"), &r.state)?;
                SweepRow {
                    w_index: i,
                    delta,
                    gate_passed,
                    status: "ok".into(),
                    energy: Some(r.e_delta),
                    charge: Some(r.charge),
                    lambda_mult: Some(r.lambda_mult),
                    kkt_residual: Some(r.kkt_residual),
                    iters: Some(r.iters),
                }
            }
            Err(msg) => SweepRow {
                w_index: i,
                delta,
                gate_passed,
                status: msg.clone(),
                energy: None,
                charge: None,
                lambda_mult: None,
                kkt_residual: None,
                iters: None,
            },
        });
    }
    run.json("sweep", "sweep.json", &serde_json::json!({ "w": ws, "rows": rows }))?;
    let any_gate = certs.iter().any(|c| !c.gate_passed());
    let any_fail = rows.iter().any(|r| r.status != "ok");
    if any_gate {
        Err(Failure::new(FailureKind::Gate, "sweep", "at least one potential failed the hypothesis gate"))
    } else if any_fail {
        Err(Failure::new(FailureKind::Numerical, "sweep", "at least one run did not converge"))
    } else {
        Ok(())
    }
}

/// Closed-form cubic NLS soliton `√(2μ) sech(√μ x)` for `N(s) = −s⁴/4`.
fn sech_oracle(spec: &ModelSpec, mu: f64) -> Option<FieldState> {
    let cubic = spec.tag() == ModelTag::Nls
        && spec.dim() == 1
        && matches!(spec.w().family, Family::SinglePower { b, p } if b == 1.0 && p == 4.0);
    if !cubic || !(mu > 0.0) {
        return None;
    }
    let psi = spec.grid().sample(|x| Complex64::new((2.0 * mu).sqrt() / (mu.sqrt() * x[0]).cosh(), 0.0));
    FieldState::nls(spec.grid().clone(), psi).ok()
}

#[derive(Serialize)]
struct DemoSummary {
    delta: f64,
    energy: f64,
    charge: f64,
    lambda_mult: f64,
    kkt_residual: f64,
    frequency_mu: f64,
    profile_error: Option<f64>,
    energy_drift: f64,
    charge_drift: f64,
}

pub fn demo(run: &mut Run) -> Outcome {
    let spec = run.cfg.model.clone();
    run.gate(&spec)?;
    let deltas = run.deltas()?;
    let fam = run.continuation(&spec, &deltas[..1])?;
    let r = &fam.members[0].refined;
    let mu = spec.w().m_sq - 2.0 * r.lambda_mult;
    let oracle = sech_oracle(&spec, mu);
    let aligned = match &oracle {
        Some(o) => orbit_alignment(o, &r.state).map_err(|e| Failure::from_core("demo", e))?.apply(&r.state),
        None => r.state.clone(),
    };
    let profile_error = oracle.as_ref().map(|o| o.add_scaled(-1.0, &aligned).map(|d| d.norm_l2() / o.norm_l2()));
    let profile_error = profile_error.transpose().map_err(|e| Failure::from_core("demo", e))?;

    let psi = aligned.complex(0).map(|p| p.to_vec()).unwrap_or_default();
    let mut csv = String::from("x,re,im,modulus,oracle\n");
    for (j, z) in psi.iter().enumerate() {
        let x = spec.grid().position(j)[0];
        let o = oracle.as_ref().and_then(|o| o.complex(0)).map(|p| fmt17(p[j].re)).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{o}", fmt17(x), fmt17(z.re), fmt17(z.im), fmt17(z.norm()));
    }
    run.out.write_bytes("demo", "soliton_profile.csv", csv.as_bytes()).map_err(|e| Failure::io("demo", e))?;

    let reference = Reference::at(&spec, &r.state);
    let trace = evolve(&spec, &r.state, &run.cfg.evolve, Some(&reference)).map_err(|e| Failure::from_core("demo", e))?;
    run.out.write_with("demo", "trace.csv", |w| write_trace(&trace, w)).map_err(|e| Failure::io("demo", e))?;
    let cons = conservation_report(&trace);
    let summary = DemoSummary {
        delta: fam.members[0].delta,
        energy: r.e_delta,
        charge: r.charge,
        lambda_mult: r.lambda_mult,
        kkt_residual: r.kkt_residual,
        frequency_mu: mu,
        profile_error,
        energy_drift: cons.energy_drift,
        charge_drift: cons.charge_drift,
    };
    run.json("demo", "demo.json", &summary)?;
    run.say(format!(
        "soliton: μ = {mu:.6}, kkt = {:.2e}, profile error = {}",
        r.kkt_residual,
        profile_error.map(|e| format!("{e:.2e}")).unwrap_or_else(|| "n/a".into())
    ));
    if r.kkt_residual > 1e-6 || profile_error.is_some_and(|e| e > 1e-3) {
        return Err(Failure::new(FailureKind::Numerical, "demo", "soliton does not match the closed-form profile"));
    }
    Ok(())
}
