//! Water-vapor absorption lines on the free-space beam path.
//!
//! Each line contributes a complex index perturbation linear in the absolute
//! humidity `a`:
//!
//! ```text
//! dn(f) = a * sum_k S_k g_k [1 / (f_k - f - i g_k) + 1 / (f_k + f + i g_k)]
//! ```
//!
//! so `Im dn` is a Lorentzian of half width `g_k` centred on `f_k` and the
//! second term keeps the response real at DC. The transmission factor is
//! `exp(i 2 pi f L dn / c)`, whose log-magnitude is linear in `a`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dielectric::C_MM_PER_PS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaporLine {
    /// THz
    pub center: f64,
    /// peak index perturbation per g/m^3
    pub strength: f64,
    /// THz
    pub half_width: f64,
}

/// Strongest rotational lines between 0.55 and 1.7 THz with rounded
/// relative strengths (HITRAN), scaled to a common peak strength.
pub fn default_lines() -> Vec<VaporLine> {
    const PEAK: f64 = 1.5e-5;
    const HWHM: f64 = 0.005;
    [(0.557, 0.8), (0.752, 0.5), (0.988, 0.3), (1.097, 1.0), (1.163, 0.7), (1.411, 0.5), (1.603, 0.4), (1.670, 0.9)]
        .into_iter()
        .map(|(center, rel)| VaporLine { center, strength: PEAK * rel, half_width: HWHM })
        .collect()
}

pub fn index_perturbation(lines: &[VaporLine], f_thz: f64, a: f64) -> Complex64 {
    let i = Complex64::i();
    let mut sum = Complex64::new(0.0, 0.0);
    for l in lines {
        let g = l.half_width;
        sum += l.strength * g * (1.0 / (l.center - f_thz - i * g) + 1.0 / (l.center + f_thz + i * g));
    }
    sum * a
}

/// Transmission factor of `path_len` mm of humid air relative to dry air.
pub fn vapor_transmission(f_thz: f64, a: f64, path_len: f64) -> Complex64 {
    vapor_transmission_with(&default_lines(), f_thz, a, path_len)
}

pub fn vapor_transmission_with(lines: &[VaporLine], f_thz: f64, a: f64, path_len: f64) -> Complex64 {
    if a == 0.0 || path_len == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let dn = index_perturbation(lines, f_thz, a);
    (Complex64::i() * dn * (TAU * f_thz * path_len / C_MM_PER_PS)).exp()
}
