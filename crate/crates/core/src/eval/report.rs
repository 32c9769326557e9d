use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{mae, median_pct_diff, MetricConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    pub enabled: bool,
    pub warmup: usize,
    pub runs: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { enabled: true, warmup: 10, runs: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub sd_ms: f64,
    pub runs: usize,
}

/// Times `f(i)` for single records `i`, cycling through `0..n_records`,
/// after `warmup` untimed calls.
pub fn time_inference(
    n_records: usize,
    cfg: &TimingConfig,
    mut f: impl FnMut(usize) -> Result<f64>,
) -> Result<Option<TimingStats>> {
    if !cfg.enabled || n_records == 0 || cfg.runs == 0 {
        return Ok(None);
    }
    for i in 0..cfg.warmup {
        std::hint::black_box(f(i % n_records)?);
    }
    let mut ms = Vec::with_capacity(cfg.runs);
    for i in 0..cfg.runs {
        let t = Instant::now();
        std::hint::black_box(f(i % n_records)?);
        ms.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let n = ms.len() as f64;
    let mean = ms.iter().sum::<f64>() / n;
    let sd = (ms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Some(TimingStats { mean_ms: mean, sd_ms: sd, runs: cfg.runs }))
}

const CSV_HEADER: &str = "model,series_id,i,g_b,g_p,delta\n";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleResidual {
    pub series_id: u32,
    pub acq_index: u32,
    pub g_b: f64,
    pub g_p: f64,
    /// `g_b - g_p`
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub n_test: usize,
    pub mae: f64,
    pub median_pct_diff: f64,
    pub epsilon: f64,
    pub samples: Vec<SampleResidual>,
    pub timing: Option<TimingStats>,
    pub train_hash: String,
    pub test_hash: String,
    /// the test set is byte-identical to the training set
    pub leak: bool,
}

impl ModelReport {
    pub fn new(model: &str, train: &Dataset, test: &Dataset, g_p: &[f64], metric: &MetricConfig) -> Result<Self> {
        Self::with_train_hash(model, &train.content_hash(), test, g_p, metric)
    }

    /// As [`ModelReport::new`] when only the training set's content hash is known.
    pub fn with_train_hash(
        model: &str,
        train_hash: &str,
        test: &Dataset,
        g_p: &[f64],
        metric: &MetricConfig,
    ) -> Result<Self> {
        if g_p.len() != test.len() {
            return Err(Error::ShapeMismatch { expected: test.len(), actual: g_p.len() });
        }
        let g_b = test.g_values();
        let samples = test
            .records()
            .iter()
            .zip(g_p)
            .map(|(r, &p)| SampleResidual {
                series_id: r.series_id,
                acq_index: r.acq_index,
                g_b: r.g_b,
                g_p: p,
                delta: r.g_b - p,
            })
            .collect();
        let train_hash = train_hash.to_string();
        let test_hash = test.content_hash();
        Ok(Self {
            model: model.to_string(),
            n_test: test.len(),
            mae: mae(g_p, &g_b)?,
            median_pct_diff: median_pct_diff(g_p, &g_b, metric.epsilon)?,
            epsilon: metric.epsilon,
            samples,
            timing: None,
            leak: train_hash == test_hash,
            train_hash,
            test_hash,
        })
    }

    /// Per-sample residual rows, without a header.
    pub fn csv_rows(&self, out: &mut String) {
        for r in &self.samples {
            let _ = writeln!(out, "{},{},{},{:e},{:e},{:e}", self.model, r.series_id, r.acq_index, r.g_b, r.g_p, r.delta);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        self.csv_rows(&mut s);
        s
    }

    /// Mean |delta| below and at-or-above `g_split` mg.
    pub fn residual_split(&self, g_split: f64) -> (f64, f64) {
        let mean = |v: Vec<f64>| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        let (lo, hi): (Vec<&SampleResidual>, Vec<&SampleResidual>) = self.samples.iter().partition(|s| s.g_b < g_split);
        (mean(lo.iter().map(|s| s.delta.abs()).collect()), mean(hi.iter().map(|s| s.delta.abs()).collect()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Random,
    CaseI,
    CaseII,
    CaseIII,
}

impl ScenarioId {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioId::Random => "random",
            ScenarioId::CaseI => "I",
            ScenarioId::CaseII => "II",
            ScenarioId::CaseIII => "III",
        }
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(ScenarioId::Random),
            "i" | "1" | "case-i" => Ok(ScenarioId::CaseI),
            "ii" | "2" | "case-ii" => Ok(ScenarioId::CaseII),
            "iii" | "3" | "case-iii" => Ok(ScenarioId::CaseIII),
            _ => Err(Error::invalid(format!("unknown scenario {s:?} (random, I, II, III)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioId,
    pub n_train: usize,
    pub n_test: usize,
    pub held_out_series: Vec<u32>,
    pub models: Vec<ModelReport>,
}

impl ScenarioReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Copy with every timing field cleared.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.models.iter_mut().for_each(|m| m.timing = None);
        r
    }

    /// One row per model and test record: the series-resolved residual table.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        for m in &self.models {
            m.csv_rows(&mut s);
        }
        s
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "scenario {}: {} train / {} test records\nmodel  MAE(mg)  median%  infer(ms)\n",
            self.scenario.label(),
            self.n_train,
            self.n_test
        );
        for m in &self.models {
            let t = m.timing.map_or("-".to_string(), |t| format!("{:.2} ± {:.2}", t.mean_ms, t.sd_ms));
            let _ = writeln!(s, "{:<6} {:>7.3}  {:>7.2}  {}", m.model, m.mae, 100.0 * m.median_pct_diff, t);
        }
        s
    }
}
