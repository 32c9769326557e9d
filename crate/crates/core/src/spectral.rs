//! Discrete spectra of real time traces.
//!
//! Spectra use the physics sign convention `X(f) = sum_n x[n] exp(+2 pi i f t_n)`,
//! matching fields that evolve as `exp(-i omega t)`: a transfer function
//! `H(f)` multiplies `X(f)` directly and `exp(+i omega tau)` delays by `tau`.
//! Only the non-negative half of the spectrum is stored; the negative half is
//! implied by Hermitian symmetry of real signals.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct RealSpectrum {
    plan_to_freq: Arc<dyn Fft<f64>>,
    plan_to_time: Arc<dyn Fft<f64>>,
    n_fft: usize,
    dt: f64,
}

impl std::fmt::Debug for RealSpectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealSpectrum")
            .field("n_fft", &self.n_fft)
            .field("dt", &self.dt)
            .finish()
    }
}

impl RealSpectrum {
    /// Transform of length `n_fft` for samples spaced `dt` ps apart.
    pub fn new(n_fft: usize, dt: f64) -> Self {
        let mut planner = FftPlanner::new();
        // rustfft's inverse kernel is exp(+i...), which is our forward direction.
        let plan_to_freq = planner.plan_fft_inverse(n_fft);
        let plan_to_time = planner.plan_fft_forward(n_fft);
        Self { plan_to_freq, plan_to_time, n_fft, dt }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored bins, `n_fft / 2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frequency of bin `k` in THz.
    pub fn freq(&self, k: usize) -> f64 {
        k as f64 / (self.n_fft as f64 * self.dt)
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|k| self.freq(k)).collect()
    }

    /// Half spectrum of `x` zero-padded to `n_fft`.
    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        assert!(x.len() <= self.n_fft, "signal longer than transform");
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_fft];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.plan_to_freq.process(&mut buf);
        buf.truncate(self.n_bins());
        buf
    }

    /// Real signal of length `n_out` from a half spectrum. The Nyquist bin,
    /// when present, contributes only its real part.
    pub fn inverse(&self, half: &[Complex64], n_out: usize) -> Vec<f64> {
        assert_eq!(half.len(), self.n_bins());
        let n = self.n_fft;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(half[0].re, 0.0);
        for k in 1..half.len() {
            if 2 * k == n {
                buf[k] = Complex64::new(half[k].re, 0.0);
            } else {
                buf[k] = half[k];
                buf[n - k] = half[k].conj();
            }
        }
        self.plan_to_time.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().take(n_out).map(|c| c.re * scale).collect()
    }
}

/// Band-limited interpolation by an integer factor with an optional spectral
/// cutoff. Holds its FFT plans so it can be reused across traces of one length.
#[derive(Debug, Clone)]
pub struct Interpolator {
    coarse: RealSpectrum,
    fine: RealSpectrum,
    factor: usize,
    cutoff_thz: Option<f64>,
}

impl Interpolator {
    pub fn new(n: usize, dt: f64, factor: usize, cutoff_thz: Option<f64>) -> Self {
        assert!(factor >= 1);
        Self {
            coarse: RealSpectrum::new(n, dt),
            fine: RealSpectrum::new(n * factor, dt / factor as f64),
            factor,
            cutoff_thz,
        }
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Samples on the grid `dt / factor`, `x.len() * factor` points, treating
    /// `x` as periodic.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.coarse.n_fft();
        assert_eq!(x.len(), n);
        let mut half = self.coarse.forward(x);
        if let Some(fc) = self.cutoff_thz {
            for (k, c) in half.iter_mut().enumerate() {
                if self.coarse.freq(k) > fc {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        let mut padded = vec![Complex64::new(0.0, 0.0); self.fine.n_bins()];
        padded[..half.len()].copy_from_slice(&half);
        if n % 2 == 0 {
            // The coarse Nyquist term splits evenly between +f and -f on the fine grid.
            let last = half.len() - 1;
            padded[last] = Complex64::new(0.5 * half[last].re, 0.0);
        }
        let mut y = self.fine.inverse(&padded, n * self.factor);
        let s = self.factor as f64;
        for v in &mut y {
            *v *= s;
        }
        y
    }
}

pub fn interpolate(x: &[f64], dt: f64, factor: usize, cutoff_thz: Option<f64>) -> Vec<f64> {
    Interpolator::new(x.len(), dt, factor, cutoff_thz).apply(x)
}

/// Delays real signals by arbitrary amounts (negative advances) with a linear
/// phase ramp on the zero-padded spectrum. Content pushed past the ends of
/// the padded window wraps around into the padding.
#[derive(Debug, Clone)]
pub struct Shifter {
    spec: RealSpectrum,
    n: usize,
}

impl Shifter {
    pub fn new(n: usize, dt: f64, pad_factor: usize) -> Self {
        Self { spec: RealSpectrum::new(n * pad_factor.max(1), dt), n }
    }

    pub fn apply(&self, x: &[f64], tau: f64) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut half = self.spec.forward(x);
        for (k, c) in half.iter_mut().enumerate() {
            let w = std::f64::consts::TAU * self.spec.freq(k);
            *c *= Complex64::from_polar(1.0, w * tau);
        }
        self.spec.inverse(&half, self.n)
    }
}

pub fn shift(x: &[f64], dt: f64, tau: f64, pad_factor: usize) -> Vec<f64> {
    Shifter::new(x.len(), dt, pad_factor).apply(x, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let spec = RealSpectrum::new(128, 0.05);
        let y = spec.inverse(&spec.forward(&x), 50);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_phase_ramp_delays() {
        let n = 256;
        let dt = 0.05;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt - 3.0;
                (-t * t / 0.02).exp()
            })
            .collect();
        let y = shift(&x, dt, 10.0 * dt, 2);
        let peak = |v: &[f64]| {
            v.iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc })
                .0
        };
        assert_eq!(peak(&y), peak(&x) + 10);
    }

    #[test]
    fn interpolation_passes_through_samples() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin() + 0.2 * (i as f64 * 1.1).cos()).collect();
        let y = interpolate(&x, 0.1, 8, None);
        assert_eq!(y.len(), n * 8);
        for i in 0..n {
            assert!((y[8 * i] - x[i]).abs() < 1e-9, "sample {i}");
        }
    }
}
