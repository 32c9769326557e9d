//! Run configuration: built-in defaults, then an optional TOML file, then
//! `--set key=value` overrides. Every key must already exist in the
//! defaults, so typos are rejected instead of silently ignored.

use std::path::Path;

use leafwet::eval::{CnnPipelineConfig, DtPipelineConfig, MetricConfig, ModelKind, ScenarioConfig, TimingConfig};
use leafwet::sim::SimConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub test_fraction: f64,
    pub held_out_series: usize,
    pub split_seed: u64,
    pub models: Vec<ModelKind>,
    pub metric: MetricConfig,
    pub timing: TimingConfig,
}

impl Default for EvalSection {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            test_fraction: s.test_fraction,
            held_out_series: s.held_out_series,
            split_seed: s.split_seed,
            models: s.models,
            metric: s.metric,
            timing: s.timing,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub dt: DtPipelineConfig,
    pub cnn: CnnPipelineConfig,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// 39 TopSide series of ~272 acquisitions
    Topside,
    /// 5 BottomSide series of ~300 acquisitions
    Bottomside,
    /// 20 TopSide series of 200 acquisitions
    Desk,
}

impl RunConfig {
    pub fn with_preset(preset: Option<Preset>) -> Self {
        let sim = match preset {
            None | Some(Preset::Topside) => SimConfig::paper_topside(),
            Some(Preset::Bottomside) => SimConfig::paper_bottomside(),
            Some(Preset::Desk) => SimConfig::desk(),
        };
        Self { sim, ..Self::default() }
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            test_fraction: self.eval.test_fraction,
            held_out_series: self.eval.held_out_series,
            split_seed: self.eval.split_seed,
            models: self.eval.models.clone(),
            metric: self.eval.metric,
            timing: self.eval.timing,
            dt: self.dt.clone(),
            cnn: self.cnn.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// SHA-256 of the resolved TOML text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml()))
    }

    /// Resolves `base`, the file at `path` and the overrides, in that order.
    pub fn load(base: RunConfig, path: Option<&Path>, sets: &[String]) -> CliResult<Self> {
        let mut tree = Value::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: Table = text
                .parse()
                .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut tree, Value::Table(file), "").map_err(|key| {
                let at = line_of(&text, &key).map_or(String::new(), |l| format!(" (line {l})"));
                CliError::Config(format!("{}{at}: unknown key `{key}`", path.display()))
            })?;
        }
        for s in sets {
            apply_set(&mut tree, s)?;
        }
        let cfg: RunConfig = tree.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Recursively overlays `src` onto `dst`; returns the first unknown key path.
fn merge(dst: &mut Value, src: Value, prefix: &str) -> Result<(), String> {
    match (dst, src) {
        (Value::Table(d), Value::Table(s)) => {
            for (k, v) in s {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match d.get_mut(&k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => return Err(path),
                }
            }
            Ok(())
        }
        (d, s) => {
            *d = s;
            Ok(())
        }
    }
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next()?;
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(leaf).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// `key.path=value`; the value is parsed as a TOML value, falling back to a
/// plain string.
fn apply_set(tree: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {assignment:?}")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: `{}` is not a section", parts[..i].join("."))))?;
        node = table.get_mut(*part).ok_or_else(|| CliError::Config(format!("--set: unknown key `{key}`")))?;
    }
    *node = value;
    Ok(())
}
