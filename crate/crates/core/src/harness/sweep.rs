use super::config::ExperimentConfig;
use super::run::{run_experiment, TrialRecord};
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;

/// A base config and a grid of overrides keyed by dotted JSON paths,
/// e.g. `"algorithm.epsilon": [0.5, 0.25]`. A key listing several paths
/// separated by commas sets them together from array choices, e.g.
/// `"universe,values.support": [[8, 8], [1024, 1024]]`. The cartesian
/// product of the axes is run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Value,
    pub grid: BTreeMap<String, Vec<Value>>,
}

fn set_path(root: &mut Value, path: &str, x: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| invalid(format!("`{path}` does not lead through objects")))?;
        if i + 1 == parts.len() {
            obj.insert(key.to_string(), x);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

fn set_axis(root: &mut Value, key: &str, choice: &Value) -> Result<()> {
    if !key.contains(',') {
        return set_path(root, key, choice.clone());
    }
    let paths: Vec<&str> = key.split(',').map(str::trim).collect();
    match choice.as_array() {
        Some(xs) if xs.len() == paths.len() => paths.iter().zip(xs).try_for_each(|(p, x)| set_path(root, p, x.clone())),
        _ => Err(invalid(format!("choices for `{key}` must be arrays of {} values", paths.len()))),
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse(format!("sweep config: {e}")))
    }

    /// Every grid point as a validated experiment, in lexicographic key order.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let mut points = vec![self.base.clone()];
        for (path, choices) in &self.grid {
            if choices.is_empty() {
                return Err(invalid(format!("grid axis `{path}` is empty")));
            }
            let mut next = Vec::with_capacity(points.len() * choices.len());
            for p in &points {
                for c in choices {
                    let mut q = p.clone();
                    set_axis(&mut q, path, c)?;
                    next.push(q);
                }
            }
            points = next;
        }
        points
            .into_iter()
            .map(|v| {
                let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Parse(format!("sweep point: {e}")))?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

/// Runs each grid point in order; records are grouped by point, then seed.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<(ExperimentConfig, Vec<TrialRecord>)>> {
    sweep.expand()?.into_iter().map(|c| run_experiment(&c).map(|r| (c, r))).collect()
}
