//! Pulse-onset detection on the peak-normalized, band-limited interpolated trace.

use serde::{Deserialize, Serialize};

use crate::data::TimeTrace;
use crate::error::{Error, Result};
use crate::spectral::Interpolator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnsetConfig {
    pub interpolation_factor: usize,
    /// per ps, on the trace divided by its maximum
    pub slope_threshold: f64,
    /// THz, spectral content above this is dropped before interpolating
    #[serde(with = "crate::serde_opt")]
    pub cutoff_thz: Option<f64>,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self { interpolation_factor: 8, slope_threshold: 1.0, cutoff_thz: Some(3.0) }
    }
}

impl OnsetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interpolation_factor == 0 {
            return Err(Error::invalid("interpolation_factor must be at least 1"));
        }
        if !(self.slope_threshold > 0.0) || !self.slope_threshold.is_finite() {
            return Err(Error::invalid(format!("slope_threshold must be positive, got {}", self.slope_threshold)));
        }
        Ok(())
    }
}

/// Reusable detector for traces of one length and sampling step.
#[derive(Debug, Clone)]
pub struct OnsetDetector {
    cfg: OnsetConfig,
    interp: Interpolator,
    n: usize,
    dt: f64,
}

impl OnsetDetector {
    pub fn new(n: usize, dt: f64, cfg: OnsetConfig) -> Result<Self> {
        cfg.validate()?;
        if n < 2 {
            return Err(Error::EmptyInput("onset detection needs at least two samples"));
        }
        Ok(Self { cfg, interp: Interpolator::new(n, dt, cfg.interpolation_factor, cfg.cutoff_thz), n, dt })
    }

    pub fn config(&self) -> &OnsetConfig {
        &self.cfg
    }

    /// First time at which the slope of `E / max E` exceeds the threshold.
    /// `record` only labels the error.
    pub fn detect(&self, trace: &TimeTrace, record: usize) -> Result<f64> {
        if trace.len() != self.n {
            return Err(Error::ShapeMismatch { expected: self.n, actual: trace.len() });
        }
        if (trace.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::invalid(format!("trace dt {} differs from detector dt {}", trace.dt, self.dt)));
        }
        let peak = trace.max();
        if !(peak > 0.0) {
            return Err(Error::ZeroMaximum);
        }
        let x: Vec<f64> = trace.samples.iter().map(|&v| v as f64 / peak).collect();
        let n = self.n;
        // Remove the end-to-end ramp so the periodic extension has no jump.
        let slope = (x[n - 1] - x[0]) / ((n - 1) as f64 * self.dt);
        let detrended: Vec<f64> = x.iter().enumerate().map(|(i, v)| v - x[0] - slope * i as f64 * self.dt).collect();
        let fine = self.interp.apply(&detrended);
        let factor = self.cfg.interpolation_factor;
        let dt_f = self.dt / factor as f64;
        // only the part covering the recorded window
        let last = (n - 1) * factor;
        let thr = self.cfg.slope_threshold;
        let mut prev = f64::NEG_INFINITY;
        for j in 0..last {
            let d = (fine[j + 1] - fine[j]) / dt_f + slope;
            if d > thr {
                let frac = if prev.is_finite() { (thr - prev) / (d - prev) } else { 0.5 };
                return Ok(trace.t0 + (j as f64 - 0.5 + frac) * dt_f);
            }
            prev = d;
        }
        Err(Error::OnsetNotFound { record, threshold: thr })
    }
}

pub fn detect_onset(trace: &TimeTrace, cfg: &OnsetConfig) -> Result<f64> {
    OnsetDetector::new(trace.len(), trace.dt, *cfg)?.detect(trace, 0)
}
