use std::f64::consts::TAU;

use num_complex::Complex64;

use super::dielectric::C_MM_PER_PS;
use super::tmm::{stack_transmission, LayerStack};
use super::vapor::{vapor_transmission_with, VaporLine};
use crate::data::TimeTrace;
use crate::spectral::RealSpectrum;

/// Frequency-domain propagation of a fixed input pulse on a zero-padded grid.
///
/// Transfer functions are taken relative to an equal length of air, so an
/// empty stack returns the input unchanged.
#[derive(Debug)]
pub struct Propagator {
    spectrum: RealSpectrum,
    n_t: usize,
    dt: f64,
    t0: f64,
    pulse: Vec<Complex64>,
    freqs: Vec<f64>,
    active: usize,
}

impl Propagator {
    pub fn new(pulse: &TimeTrace, pad_factor: usize) -> Self {
        let n_t = pulse.len();
        let spectrum = RealSpectrum::new(n_t * pad_factor.max(1), pulse.dt);
        let spec = spectrum.forward(&pulse.to_f64());
        let freqs = spectrum.freqs();
        let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let active = spec.iter().rposition(|c| c.norm() > 1e-13 * peak).map_or(0, |k| k + 1);
        Self { spectrum, n_t, dt: pulse.dt, t0: pulse.t0, pulse: spec, freqs, active }
    }

    /// Bins above this index carry no pulse energy and are left at zero.
    pub fn active_bins(&self) -> usize {
        self.active
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `stack_transmission * exp(-i k0 L)` at every grid frequency.
    pub fn stack_transfer(&self, stack: &LayerStack) -> Vec<Complex64> {
        let total = stack.total_thickness();
        let mut out = vec![Complex64::new(0.0, 0.0); self.freqs.len()];
        for (h, &f) in out.iter_mut().zip(&self.freqs).take(self.active) {
            let air = Complex64::from_polar(1.0, -TAU * f * total / C_MM_PER_PS);
            *h = stack_transmission(stack, f) * air;
        }
        out
    }

    pub fn vapor_transfer(&self, lines: &[VaporLine], a: f64, path_len: f64) -> Vec<Complex64> {
        self.freqs.iter().map(|&f| vapor_transmission_with(lines, f, a, path_len)).collect()
    }

    /// Field after applying `transfer` to the pulse spectrum, truncated to `n_t`.
    pub fn render(&self, transfer: &[Complex64]) -> Vec<f64> {
        let half: Vec<Complex64> = self.pulse.iter().zip(transfer).map(|(p, h)| p * h).collect();
        self.spectrum.inverse(&half, self.n_t)
    }

    pub fn propagate(&self, stack: &LayerStack, lines: &[VaporLine], a: f64, path_len: f64) -> TimeTrace {
        let mut h = self.stack_transfer(stack);
        for (x, v) in h.iter_mut().zip(self.vapor_transfer(lines, a, path_len)) {
            *x *= v;
        }
        TimeTrace::from_f64(&self.render(&h), self.dt, self.t0).expect("finite propagation")
    }
}

/// One-shot propagation with the default vapor lines and ×4 padding.
pub fn propagate(pulse: &TimeTrace, stack: &LayerStack, a: f64, path_len: f64) -> TimeTrace {
    Propagator::new(pulse, 4).propagate(stack, &super::vapor::default_lines(), a, path_len)
}
