//! Batch front door: the scenario registry, run configuration, report
//! emission and the exit-code contract. Two runs with the same seed and
//! configuration produce byte-identical reports up to the timing block,
//! which is excluded from the digest.

pub mod run;
pub mod scenarios;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Verdict;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    pub verdict: Verdict,
    pub detail: String,
}

impl VerdictEntry {
    pub fn new(verdict: Verdict, detail: impl Into<String>) -> VerdictEntry {
        VerdictEntry {
            verdict,
            detail: detail.into(),
        }
    }
}

/// Result of one scenario: named verdicts, loose metrics, emitted files.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ScenarioOutcome {
    pub verdicts: BTreeMap<String, VerdictEntry>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub files: Vec<String>,
}

impl ScenarioOutcome {
    pub fn verdict(&mut self, name: &str, verdict: Verdict, detail: impl Into<String>) {
        self.verdicts
            .insert(name.to_string(), VerdictEntry::new(verdict, detail));
    }

    pub fn metric(&mut self, name: &str, value: impl Serialize) {
        self.metrics.insert(
            name.to_string(),
            serde_json::to_value(value).expect("metric serializes"),
        );
    }

    pub fn has_failures(&self) -> bool {
        self.verdicts.values().any(|v| v.verdict.is_fail())
    }
}

/// Run configuration, merged from an optional JSON document and CLI flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenarios: Vec<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub grid_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenarios: Vec::new(),
            out: PathBuf::from("out"),
            seed: 42,
            threads: 1,
            grid_scale: 1.0,
        }
    }
}

/// JSON form of the run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub scenarios: Option<Vec<String>>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub grid_scale: Option<f64>,
}

impl RunConfig {
    pub fn from_doc(doc: &RunDoc) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        match (&doc.scenario, &doc.scenarios) {
            (Some(_), Some(_)) => {
                return Err(Error::Config {
                    pointer: "/scenario".into(),
                    message: "give either 'scenario' or 'scenarios', not both".into(),
                })
            }
            (Some(s), None) => cfg.scenarios = vec![s.clone()],
            (None, Some(list)) => cfg.scenarios = list.clone(),
            (None, None) => {}
        }
        if let Some(o) = &doc.out {
            cfg.out = PathBuf::from(o);
        }
        if let Some(s) = doc.seed {
            cfg.seed = s;
        }
        if let Some(t) = doc.threads {
            if t == 0 {
                return Err(Error::Config {
                    pointer: "/threads".into(),
                    message: "threads must be at least 1".into(),
                });
            }
            cfg.threads = t;
        }
        if let Some(gs) = doc.grid_scale {
            if gs.is_nan() || gs <= 0.0 {
                return Err(Error::Config {
                    pointer: "/grid_scale".into(),
                    message: "grid_scale must be positive".into(),
                });
            }
            cfg.grid_scale = gs;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for id in &self.scenarios {
            if scenarios::find(id).is_none() {
                return Err(Error::Config {
                    pointer: "/scenario".into(),
                    message: format!(
                        "unknown scenario '{id}' (known: {})",
                        scenarios::registry()
                            .iter()
                            .map(|s| s.id)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Per-run report: one block per scenario, a digest over everything but
/// the timings, and the timings.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub grid_scale: f64,
    pub scenarios: BTreeMap<String, ScenarioOutcome>,
    pub digest: String,
    /// Wall-clock milliseconds per scenario; excluded from the digest.
    pub timings_ms: BTreeMap<String, u128>,
}

impl RunReport {
    pub fn has_failures(&self) -> bool {
        self.scenarios.values().any(|s| s.has_failures())
    }
}

pub use run::{run, run_with_config};
pub use scenarios::{find, registry, Scenario};
