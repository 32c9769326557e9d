//! Windowed polynomial features for the tree regressor.
//!
//! Each record contributes the coefficients of one least-squares polynomial
//! per time window, with windows placed relative to the detected pulse onset,
//! followed by the onset time itself and the air humidity.

mod onset;
mod polyfit;
mod select;

pub use onset::{detect_onset, OnsetConfig, OnsetDetector};
pub use polyfit::{fit_polynomial, fit_window_polynomial, local_axis, lstsq_qr};
pub use select::{
    grid_search_poly_order, permutation_importance, recursive_feature_elimination, OrderSearch, RfeConfig,
    RfeStep, RfeTrace,
};

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeTrace};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How windows after the first follow the detected onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowAlignment {
    /// Every window moves with the onset.
    #[default]
    Rigid,
    /// Only the first window moves; the rest sit at fixed times
    /// `reference_onset + offset`.
    FirstOnly { reference_onset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    /// ps, `(start, end)` relative to the onset
    pub windows: Vec<(f64, f64)>,
    pub orders: Vec<usize>,
    pub alignment: WindowAlignment,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            windows: vec![(0.0, 3.0), (3.0, 6.0), (11.5, 14.5), (14.5, 17.5)],
            orders: vec![11, 2, 4, 8],
            alignment: WindowAlignment::Rigid,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.windows.len() != self.orders.len() {
            return Err(Error::ShapeMismatch { expected: self.windows.len(), actual: self.orders.len() });
        }
        let mut last_end = f64::NEG_INFINITY;
        for (m, &(s, e)) in self.windows.iter().enumerate() {
            if !(s.is_finite() && e.is_finite() && e > s) {
                return Err(Error::invalid(format!("window {} is empty: ({s}, {e})", m + 1)));
            }
            if s < last_end {
                return Err(Error::invalid(format!("window {} overlaps or precedes window {m}", m + 1)));
            }
            last_end = e;
        }
        Ok(())
    }

    /// Number of columns: all coefficients plus `t_start` and `a`.
    pub fn n_features(&self) -> usize {
        self.orders.iter().map(|n| n + 1).sum::<usize>() + 2
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_features());
        for (m, &n) in self.orders.iter().enumerate() {
            for k in 0..=n {
                names.push(if k == 0 { format!("w{}:bias", m + 1) } else { format!("w{}:t^{k}", m + 1) });
            }
        }
        names.push("t_start".into());
        names.push("a".into());
        names
    }

    /// Absolute `[start, end]` of window `m` for a trace with onset `t_start`.
    pub fn window_at(&self, m: usize, t_start: f64) -> (f64, f64) {
        let (s, e) = self.windows[m];
        let anchor = match self.alignment {
            WindowAlignment::FirstOnly { reference_onset } if m > 0 => reference_onset,
            _ => t_start,
        };
        (anchor + s, anchor + e)
    }

    /// Feature row of one trace whose onset is already known.
    pub fn features_for(&self, trace: &TimeTrace, t_start: f64, a: f64) -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(self.n_features());
        for (m, &n) in self.orders.iter().enumerate() {
            row.extend(fit_window_polynomial(trace, self.window_at(m, t_start), n)?);
        }
        row.push(t_start);
        row.push(a);
        Ok(row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub names: Vec<String>,
    pub mask: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(values: Matrix, names: Vec<String>) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(Error::ShapeMismatch { expected: values.cols(), actual: names.len() });
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::invalid(format!("duplicate feature name {n}")));
            }
        }
        if let Some(i) = values.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {} of row {}", names[i % names.len()], i / names.len())));
        }
        let mask = vec![true; names.len()];
        Ok(Self { values, names, mask })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn set_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.n_cols() {
            return Err(Error::ShapeMismatch { expected: self.n_cols(), actual: mask.len() });
        }
        self.mask = mask;
        Ok(())
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected_indices().into_iter().map(|i| self.names[i].clone()).collect()
    }

    /// Values restricted to the masked-in columns.
    pub fn selected(&self) -> Matrix {
        self.values.select_cols(&self.selected_indices())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.names.join(",");
        s.push('\n');
        for r in 0..self.n_rows() {
            let row = self.values.row(r);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Onset of every record; the first failure reports its record index.
pub fn compute_onsets(dataset: &Dataset, cfg: &OnsetConfig) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Ok(Vec::new());
    }
    let tb = dataset.time_base();
    let det = OnsetDetector::new(tb.n_t, tb.dt, *cfg)?;
    dataset.records().par_iter().enumerate().map(|(i, r)| det.detect(&r.trace, i)).collect()
}

pub fn build_feature_matrix(dataset: &Dataset, spec: &WindowSpec, onset: &OnsetConfig) -> Result<FeatureMatrix> {
    let onsets = compute_onsets(dataset, onset)?;
    build_with_onsets(dataset, spec, &onsets)
}

/// Like [`build_feature_matrix`] with onsets computed beforehand.
pub fn build_with_onsets(dataset: &Dataset, spec: &WindowSpec, onsets: &[f64]) -> Result<FeatureMatrix> {
    spec.validate()?;
    if onsets.len() != dataset.len() {
        return Err(Error::ShapeMismatch { expected: dataset.len(), actual: onsets.len() });
    }
    let f = spec.n_features();
    let rows: Vec<Vec<f64>> = dataset
        .records()
        .par_iter()
        .zip(onsets.par_iter())
        .enumerate()
        .map(|(i, (r, &t))| {
            spec.features_for(&r.trace, t, r.a)
                .map_err(|e| Error::invalid(format!("record {i}: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(rows.len() * f);
    for r in rows {
        data.extend(r);
    }
    FeatureMatrix::new(Matrix::from_vec(dataset.len(), f, data)?, spec.feature_names())
}
