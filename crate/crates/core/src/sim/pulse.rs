use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::data::TimeTrace;

/// First derivative of a Gaussian, normalized to unit extremes:
/// `E(t) = -x exp((1 - x^2) / 2)`, `x = (t - t_peak) / tau`, `tau = 1 / (2 pi f_peak)`.
///
/// The amplitude spectrum is `f exp(-(2 pi f tau)^2 / 2)`, peaking at `f_peak`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// THz
    pub peak_freq: f64,
    /// ps, zero crossing between the two lobes
    pub delay: f64,
}

impl Default for PulseParams {
    fn default() -> Self {
        Self { peak_freq: 1.0, delay: 3.4 }
    }
}

impl PulseParams {
    pub fn tau(&self) -> f64 {
        1.0 / (TAU * self.peak_freq)
    }

    pub fn field(&self, t: f64) -> f64 {
        let x = (t - self.delay) / self.tau();
        -x * (0.5 * (1.0 - x * x)).exp()
    }

    pub fn synthesize(&self, n_t: usize, dt: f64) -> TimeTrace {
        let samples: Vec<f64> = (0..n_t).map(|i| self.field(i as f64 * dt)).collect();
        TimeTrace::from_f64(&samples, dt, 0.0).expect("pulse samples are finite")
    }
}

/// Reference pulse with default parameters.
pub fn synth_reference_pulse(n_t: usize, dt: f64) -> TimeTrace {
    PulseParams::default().synthesize(n_t, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealSpectrum;

    #[test]
    fn no_dc() {
        let p = synth_reference_pulse(760, 38.0 / 759.0);
        let sum: f64 = p.to_f64().iter().sum();
        assert!(sum.abs() < 1e-6 * p.max(), "{sum}");
    }

    #[test]
    fn paper_window() {
        let p = synth_reference_pulse(760, 0.05);
        assert!((p.time_base().span() - 37.95).abs() < 1e-9);
        let p = synth_reference_pulse(760, 38.0 / 759.0);
        assert!((p.time_base().span() - 38.0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_covers_band() {
        // Discrete spectrum on a long padded grid; bins at exactly 0.1 and 3 THz.
        let dt = 0.05;
        let n = 2000;
        let spec = RealSpectrum::new(n, dt);
        let x = PulseParams { peak_freq: 1.0, delay: 10.0 }.synthesize(n, dt).to_f64();
        let mag: Vec<f64> = spec.forward(&x).iter().map(|c| c.norm()).collect();
        let peak = mag.iter().cloned().fold(0.0, f64::max);
        let at = |f: f64| mag[(f * n as f64 * dt).round() as usize];
        assert!(at(0.1) >= 0.01 * peak);
        assert!(at(3.0) >= 0.01 * peak);
        // Closed form ratios: 0.1 e^{0.495} and 3 e^{-4}.
        assert!((at(0.1) / peak - 0.1 * (0.495f64).exp()).abs() < 1e-3);
        assert!((at(3.0) / peak - 3.0 * (-4.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn unit_extremes_at_plus_minus_tau() {
        let p = PulseParams::default();
        assert!((p.field(p.delay - p.tau()) - 1.0).abs() < 1e-15);
        assert!((p.field(p.delay + p.tau()) + 1.0).abs() < 1e-15);
    }
}
