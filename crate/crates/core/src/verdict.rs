use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceKind {
    Analytic,
    Sampled,
    ProbeFamily,
}

/// One checked condition together with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub verdict: Verdict,
    pub evidence: EvidenceKind,
    pub detail: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Concrete counterexample (or witness) description.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl Finding {
    pub fn new(id: &str, verdict: Verdict, evidence: EvidenceKind, detail: impl Into<String>) -> Self {
        Finding {
            id: id.to_string(),
            verdict,
            evidence,
            detail: detail.into(),
            parameters: BTreeMap::new(),
            counterexample: None,
        }
    }

    pub fn skipped(id: &str, evidence: EvidenceKind) -> Self {
        Finding::new(id, Verdict::Skipped, evidence, "skipped: zero budget")
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn with_counterexample(mut self, text: impl Into<String>) -> Self {
        self.counterexample = Some(text.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

pub(crate) fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}
