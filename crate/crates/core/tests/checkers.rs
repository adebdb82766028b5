use hylosolve_core::checkers::{audit, lower_bound_slack, GATE_IDS};
use hylosolve_core::functionals::{bound_m, PenaltyParams};
use hylosolve_core::{Grid, ModelSpec, ModelTag, Verdict, WSpec};

fn spec(tag: ModelTag, w: WSpec) -> ModelSpec {
    ModelSpec::new(tag, Grid::line(512, 40.0).unwrap(), w).unwrap()
}

#[test]
fn focusing_cubic_nls_passes_the_gate() {
    let cert = audit(&spec(ModelTag::Nls, WSpec::single_power(1.0, 1.0, 4.0).unwrap()), None, 2000, 5);
    assert!(cert.gate_passed(), "{:?}", cert.failed_ids());
    for id in GATE_IDS {
        assert_eq!(cert.get(id).unwrap().verdict, Verdict::Pass, "{id}");
    }
    assert_eq!(cert.s_exp, Some(3.0));
}

#[test]
fn saturating_wave_and_beam_models_pass_the_gate() {
    for tag in [ModelTag::Nwe, ModelTag::Nbe] {
        let cert = audit(&spec(tag, WSpec::saturating(1.0, 1.0, 0.5).unwrap()), None, 2000, 5);
        assert!(cert.gate_passed(), "{tag:?}: {:?}", cert.failed_ids());
    }
}

#[test]
fn pure_quadratic_fails_only_through_hylomorphy() {
    let cert = audit(&spec(ModelTag::Nls, WSpec::quadratic(1.0).unwrap()), None, 2000, 5);
    let failed = cert.failed_ids();
    assert!(failed.contains(&"hh"), "{failed:?}");
    assert!(failed.iter().all(|id| *id == "hh" || id.starts_with("W-")), "{failed:?}");
    assert!(cert.get("hh").unwrap().counterexample.is_some());
}

#[test]
fn supercritical_power_fails_coercivity_with_a_witness() {
    let cert = audit(&spec(ModelTag::Nls, WSpec::single_power(1.0, 1.0, 8.0).unwrap()), None, 2000, 5);
    assert!(!cert.gate_passed());
    let ec3 = cert.get("EC-3i").unwrap();
    assert_eq!(ec3.verdict, Verdict::Fail);
    assert!(ec3.counterexample.as_deref().unwrap().contains("width"));
    assert_eq!(cert.get("Nash").unwrap().verdict, Verdict::Fail);
}

#[test]
fn audits_are_reproducible() {
    let s = spec(ModelTag::Nwe, WSpec::saturating(1.0, 1.0, 0.5).unwrap());
    let a = serde_json::to_string(&audit(&s, None, 500, 9)).unwrap();
    let b = serde_json::to_string(&audit(&s, None, 500, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_budget_certificate_skips_every_check() {
    let cert = audit(&spec(ModelTag::Nls, WSpec::single_power(1.0, 1.0, 4.0).unwrap()), None, 0, 1);
    assert!(cert.findings.iter().all(|f| f.verdict == Verdict::Skipped));
    assert!(!cert.gate_passed());
}

#[test]
fn lower_bound_holds_for_explicit_parameters() {
    let s = spec(ModelTag::Nls, WSpec::single_power(1.0, 1.0, 4.0).unwrap());
    // a larger a than the Nash choice only strengthens the bound
    let params = PenaltyParams::new(0.02, 0.05, 3.0).unwrap();
    let (slack, skipped) = lower_bound_slack(&s, &params, 300, 2);
    assert_eq!(skipped, 0);
    assert!(slack >= -1e-9, "slack {slack:e}");
    assert!(bound_m(&params) > 0.0);
}
