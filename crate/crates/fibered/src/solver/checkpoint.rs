//! Solver checkpoints: component fields in the text field format plus a
//! small JSON meta file; `load_checkpoint` restores the latest one for a
//! resumed solve.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::io::{read_field, write_field};
use crate::model::SolutionTuple;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    iteration: usize,
    residual: f64,
    components: usize,
}

pub fn save_checkpoint(
    dir: &Path,
    iteration: usize,
    sol: &SolutionTuple,
    residual: f64,
) -> Result<()> {
    let sub = dir.join(format!("checkpoint-{iteration:08}"));
    std::fs::create_dir_all(&sub)?;
    for (i, c) in sol.components().iter().enumerate() {
        write_field(c, &sub.join(format!("component-{i}.field")))?;
    }
    let meta = Meta {
        iteration,
        residual,
        components: sol.n(),
    };
    std::fs::write(sub.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Loads the checkpoint with the highest iteration number under `dir`.
pub fn load_checkpoint(dir: &Path) -> Result<(usize, SolutionTuple)> {
    let mut best: Option<(usize, std::path::PathBuf)> = None;
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(num) = name.strip_prefix("checkpoint-") {
            if let Ok(it) = num.parse::<usize>() {
                if best.as_ref().map(|(b, _)| it > *b).unwrap_or(true) {
                    best = Some((it, entry.path()));
                }
            }
        }
    }
    let (iteration, path) =
        best.ok_or_else(|| Error::Parse(format!("no checkpoints under {}", dir.display())))?;
    let meta: Meta = serde_json::from_str(&std::fs::read_to_string(path.join("meta.json"))?)?;
    let mut comps = Vec::with_capacity(meta.components);
    for i in 0..meta.components {
        comps.push(read_field(&path.join(format!("component-{i}.field")))?);
    }
    Ok((iteration, SolutionTuple::new(comps)?))
}
