//! Traces, labelled records and datasets.

mod io;
mod split;

pub use io::{read_dataset, write_dataset, Manifest, RecordMeta, MANIFEST_FILE, TRACES_FILE};
pub use split::{kfold_indices, split_by_series, split_random};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Time axis shared by every trace of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBase {
    pub n_t: usize,
    /// ps per sample
    pub dt: f64,
    /// ps, time of the first sample
    pub t0: f64,
}

impl TimeBase {
    pub const PAPER_SAMPLES: usize = 760;
    pub const PAPER_SPAN_PS: f64 = 38.0;

    /// 760 samples spanning 38 ps.
    pub fn paper() -> Self {
        Self::with_span(Self::PAPER_SAMPLES, Self::PAPER_SPAN_PS)
    }

    pub fn with_span(n_t: usize, span_ps: f64) -> Self {
        Self { n_t, dt: span_ps / (n_t - 1) as f64, t0: 0.0 }
    }

    pub fn span(&self) -> f64 {
        self.dt * (self.n_t.saturating_sub(1)) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.time(i)).collect()
    }
}

/// One sampled field waveform E(t), arbitrary linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub samples: Vec<f32>,
    pub dt: f64,
    pub t0: f64,
}

impl TimeTrace {
    pub fn new(samples: Vec<f32>, dt: f64, t0: f64) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("trace sample {i}")));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { samples, dt, t0 })
    }

    pub fn from_f64(samples: &[f64], dt: f64, t0: f64) -> Result<Self> {
        Self::new(samples.iter().map(|&v| v as f32).collect(), dt, t0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_base(&self) -> TimeBase {
        TimeBase { n_t: self.samples.len(), dt: self.dt, t0: self.t0 }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&v| v as f64).collect()
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64))
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }
}

/// Which leaf surface faces the beam. The water pattern is always on the
/// emitter side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Orientation {
    /// Beam enters through the smooth upper surface.
    #[default]
    TopSide,
    /// Beam enters through the rough lower surface.
    BottomSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub trace: TimeTrace,
    /// Gravimetric benchmark water weight, mg.
    pub g_b: f64,
    /// Absolute air humidity, g/m^3.
    pub a: f64,
    pub series_id: u32,
    pub acq_index: u32,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub note: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    time_base: TimeBase,
    records: Vec<SampleRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(time_base: TimeBase, records: Vec<SampleRecord>, provenance: Provenance) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.trace.time_base() != time_base {
                return Err(Error::invalid(format!(
                    "record {i} time base {:?} differs from dataset {:?}",
                    r.trace.time_base(),
                    time_base
                )));
            }
            if !(r.g_b >= 0.0) || !(r.a >= 0.0) {
                return Err(Error::invalid(format!("record {i} has negative or NaN g_b/a")));
            }
        }
        Ok(Self { time_base, records, provenance })
    }

    pub fn empty(time_base: TimeBase) -> Self {
        Self { time_base, records: Vec::new(), provenance: Provenance::default() }
    }

    pub fn time_base(&self) -> TimeBase {
        self.time_base
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn g_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.g_b).collect()
    }

    pub fn a_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.a).collect()
    }

    /// Distinct series ids in order of first appearance.
    pub fn series_ids(&self) -> Vec<u32> {
        let mut ids = Vec::new();
        for r in &self.records {
            if !ids.contains(&r.series_id) {
                ids.push(r.series_id);
            }
        }
        ids
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            time_base: self.time_base,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Records of `self` followed by those of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if !other.is_empty() && !self.is_empty() && other.time_base != self.time_base {
            return Err(Error::invalid("cannot concatenate datasets with different time bases"));
        }
        let time_base = if self.is_empty() { other.time_base } else { self.time_base };
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        let provenance = Provenance {
            note: format!("concat({}, {})", self.provenance.note, other.provenance.note),
            config_hash: format!("{}+{}", self.provenance.config_hash, other.provenance.config_hash),
        };
        Ok(Dataset { time_base, records, provenance })
    }

    /// SHA-256 over the time base, per-record metadata and raw f32 samples.
    /// Provenance text is not part of the hash.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.time_base.n_t as u64).to_le_bytes());
        h.update(self.time_base.dt.to_le_bytes());
        h.update(self.time_base.t0.to_le_bytes());
        for r in &self.records {
            h.update(r.g_b.to_le_bytes());
            h.update(r.a.to_le_bytes());
            h.update(r.series_id.to_le_bytes());
            h.update(r.acq_index.to_le_bytes());
            h.update([r.orientation as u8]);
            for s in &r.trace.samples {
                h.update(s.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Predictions against benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub g_p: Vec<f64>,
    pub g_b: Vec<f64>,
    /// g_b - g_p per sample
    pub delta: Vec<f64>,
    pub mae: f64,
    pub median_pct_diff: f64,
}

impl PredictionReport {
    pub fn new(g_p: Vec<f64>, g_b: Vec<f64>, epsilon: f64) -> Result<Self> {
        let mae = crate::eval::mae(&g_p, &g_b)?;
        let median_pct_diff = crate::eval::median_pct_diff(&g_p, &g_b, epsilon)?;
        let delta = g_b.iter().zip(&g_p).map(|(b, p)| b - p).collect();
        Ok(Self { g_p, g_b, delta, mae, median_pct_diff })
    }
}
