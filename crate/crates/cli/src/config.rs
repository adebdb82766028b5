use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use hylosolve_core::dynamics::EvolveOptions;
use hylosolve_core::functionals::Lambda0Options;
use hylosolve_core::minimizer::MinimizeOptions;
use hylosolve_core::stability::Perturbation;
use hylosolve_core::{ModelSpec, WSpec};
use serde::{Deserialize, Serialize};

/// A number or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Keyword(AutoKeyword),
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Keyword(AutoKeyword::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

impl AutoOr {
    pub fn value(self) -> Option<f64> {
        match self {
            AutoOr::Value(v) => Some(v),
            AutoOr::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyBlock {
    /// Strictly decreasing list of penalty weights.
    pub delta: Vec<f64>,
    pub a: AutoOr,
    pub s: AutoOr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityBlock {
    pub perturbations: Vec<Perturbation>,
    pub kappa: f64,
    pub abs_tol: f64,
    /// Shell radii for the V-separation scan; empty skips the scan.
    pub scan_radii: Vec<f64>,
    pub scan_directions: usize,
}

impl Default for StabilityBlock {
    fn default() -> Self {
        StabilityBlock { perturbations: Vec::new(), kappa: 4.0, abs_tol: 1e-6, scan_radii: Vec::new(), scan_directions: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditBlock {
    pub budget: usize,
}

impl Default for AuditBlock {
    fn default() -> Self {
        AuditBlock { budget: hylosolve_core::checkers::DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Potentials crossed with every `penalty.delta` entry.
    pub w: Vec<WSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub penalty: PenaltyBlock,
    #[serde(default)]
    pub minimize: MinimizeOptions,
    #[serde(default)]
    pub evolve: EvolveOptions,
    #[serde(default)]
    pub stability: StabilityBlock,
    #[serde(default)]
    pub audit: AuditBlock,
    #[serde(default)]
    pub lambda0: Lambda0Options,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Parses, checks against the shipped schema, then applies the semantic
    /// checks. Nothing is computed before all three succeed.
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let errors: Vec<String> =
            schema().iter_errors(&value).map(|e| format!("{} at '{}'", e, e.instance_path())).collect();
        if !errors.is_empty() {
            return Err(format!("config does not match the schema: {}", errors.join("; ")));
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Semantic checks the JSON shape alone cannot express.
    pub fn validate(&self) -> Result<(), String> {
        let d = &self.penalty.delta;
        if d.iter().any(|x| !(*x > 0.0 && x.is_finite())) || d.windows(2).any(|w| w[1] >= w[0]) {
            return Err(format!("penalty.delta must be positive and strictly decreasing, got {d:?}"));
        }
        if let Some(a) = self.penalty.a.value() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(format!("penalty.a = {a} must be >= 0"));
            }
        }
        if let Some(s) = self.penalty.s.value() {
            if !(s >= 1.0 && s.is_finite()) {
                return Err(format!("penalty.s = {s} must be >= 1"));
            }
        }
        self.minimize.validate().map_err(|e| e.to_string())?;
        self.evolve.validate().map_err(|e| e.to_string())?;
        for p in &self.stability.perturbations {
            p.validate().map_err(|e| e.to_string())?;
        }
        if !(self.stability.kappa >= 1.0) || !(self.stability.abs_tol >= 0.0) {
            return Err("stability.kappa must be >= 1 and abs_tol >= 0".into());
        }
        if self.stability.scan_radii.iter().any(|r| !(*r >= 0.0)) || self.stability.scan_directions == 0 {
            return Err("stability.scan_radii must be >= 0 and scan_directions >= 1".into());
        }
        for w in &self.sweep.w {
            w.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// The canonical cubic NLS setup used by `demo`.
    pub fn demo() -> Self {
        let text = include_str!("../../../configs/nls_demo.json");
        RunConfig::parse(text).expect("bundled demo config is valid")
    }
}

pub const SCHEMA: &str = include_str!("../../../schema/run_config.schema.json");

fn schema() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let doc: serde_json::Value = serde_json::from_str(SCHEMA).expect("schema file is valid JSON");
        jsonschema::validator_for(&doc).expect("schema file is a valid JSON schema")
    })
}
