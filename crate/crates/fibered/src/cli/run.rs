//! Orchestration: runs scenarios (concurrently up to the configured
//! thread count, each diagnostic read-only over its own data), writes
//! `report.json` plus per-scenario CSV artifacts, and computes the
//! deterministic digest.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use crate::cli::scenarios::{dispatch, ScenarioCtx};
use crate::cli::{RunConfig, RunReport, ScenarioOutcome, VerdictEntry};
use crate::diagnostics::Verdict;
use crate::error::Result;
use crate::linalg::fnv1a64;

/// Runs the configured scenarios and writes the report tree under
/// `cfg.out`. Scenario errors surface as a `scenario-error` failure
/// verdict, not a process abort.
pub fn run_with_config(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let ids: Vec<String> = if cfg.scenarios.is_empty() {
        crate::cli::scenarios::registry()
            .iter()
            .map(|s| s.id.to_string())
            .collect()
    } else {
        cfg.scenarios.clone()
    };
    std::fs::create_dir_all(&cfg.out)?;
    let queue: Mutex<Vec<String>> = Mutex::new(ids.clone());
    let results: Mutex<BTreeMap<String, (ScenarioOutcome, u128)>> = Mutex::new(BTreeMap::new());
    let workers = cfg.threads.clamp(1, ids.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let id = {
                    let mut q = queue.lock().unwrap();
                    match q.pop() {
                        Some(id) => id,
                        None => break,
                    }
                };
                let dir = cfg.out.join(&id);
                let started = Instant::now();
                let outcome = std::fs::create_dir_all(&dir)
                    .map_err(crate::error::Error::from)
                    .and_then(|_| {
                        dispatch(
                            &id,
                            &ScenarioCtx {
                                out: &dir,
                                seed: cfg.seed,
                                grid_scale: cfg.grid_scale,
                            },
                        )
                    })
                    .unwrap_or_else(|err| {
                        let mut o = ScenarioOutcome::default();
                        o.verdicts.insert(
                            "scenario-error".into(),
                            VerdictEntry::new(Verdict::Fail, err.to_string()),
                        );
                        o
                    });
                let elapsed = started.elapsed().as_millis();
                results.lock().unwrap().insert(id, (outcome, elapsed));
            });
        }
    });
    let collected = results.into_inner().unwrap();
    let mut scenarios = BTreeMap::new();
    let mut timings_ms = BTreeMap::new();
    for (id, (outcome, ms)) in collected {
        timings_ms.insert(id.clone(), ms);
        scenarios.insert(id, outcome);
    }
    let digest_payload = serde_json::to_vec(&serde_json::json!({
        "seed": cfg.seed,
        "grid_scale": cfg.grid_scale,
        "scenarios": scenarios,
    }))?;
    let report = RunReport {
        seed: cfg.seed,
        grid_scale: cfg.grid_scale,
        scenarios,
        digest: format!("fnv1a64:{:016x}", fnv1a64(&digest_payload)),
        timings_ms,
    };
    std::fs::write(
        cfg.out.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// One-scenario convenience used by tests and the guide.
pub fn run(scenario: &str, out: &std::path::Path, seed: u64) -> Result<RunReport> {
    run_with_config(&RunConfig {
        scenarios: vec![scenario.to_string()],
        out: out.to_path_buf(),
        seed,
        threads: 1,
        grid_scale: 1.0,
    })
}
