//! Normal-incidence transfer matrices for a planar stack in air.
//!
//! Each layer contributes the characteristic matrix
//!
//! ```text
//! M = [[cos d,        -i sin d / N],
//!      [-i N sin d,   cos d       ]],   d = 2 pi f N thickness / c
//! ```
//!
//! and the amplitude transmission is `t = 2 / (B + C)` with
//! `[B, C] = M_1 ... M_L [1, 1]`. To stay finite for thick absorbing layers
//! every matrix is evaluated as `exp(i d) M`, whose entries are bounded when
//! `Im d >= 0`, and the factors `exp(i d)` are reapplied to `t` at the end.
//! All multiple reflections are included.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dielectric::{DielectricModel, C_MM_PER_PS};

/// Scalar Kirchhoff loss of a randomly rough entry face:
/// `exp(-(2 pi f sigma dn / c)^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roughness {
    /// rms height, mm
    pub rms_mm: f64,
    /// refractive-index contrast across the rough face
    pub index_contrast: f64,
}

impl Roughness {
    pub fn factor(&self, f_thz: f64) -> f64 {
        let phase = TAU * f_thz * self.rms_mm * self.index_contrast / C_MM_PER_PS;
        (-0.5 * phase * phase).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub thickness_mm: f64,
    pub material: DielectricModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roughness: Option<Roughness>,
}

impl Layer {
    pub fn new(thickness_mm: f64, material: DielectricModel) -> Self {
        Self { thickness_mm, material, roughness: None }
    }

    pub fn with_roughness(mut self, roughness: Roughness) -> Self {
        self.roughness = Some(roughness);
        self
    }
}

/// Layers in beam order, bounded on both sides by semi-infinite air.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_mm).sum()
    }

    pub fn validate(&self) -> crate::Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness_mm >= 0.0) || !l.thickness_mm.is_finite() {
                return Err(crate::Error::invalid(format!("layer {i} thickness {}", l.thickness_mm)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Mat2 {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

impl Mat2 {
    fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { a: one, b: zero, c: zero, d: one }
    }

    fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Complex amplitude transmission of `stack` at `f_thz`, including the
/// propagation phase through every layer.
pub fn stack_transmission(stack: &LayerStack, f_thz: f64) -> Complex64 {
    let k0 = TAU * f_thz / C_MM_PER_PS;
    let i = Complex64::i();
    let mut total = Mat2::identity();
    let mut phase = Complex64::new(1.0, 0.0);
    let mut scatter = 1.0;
    for layer in &stack.layers {
        if let Some(r) = layer.roughness {
            scatter *= r.factor(f_thz);
        }
        if layer.thickness_mm == 0.0 {
            continue;
        }
        let n = layer.material.refractive_index(f_thz);
        let delta = n * (k0 * layer.thickness_mm);
        let e1 = (i * delta).exp();
        let e2 = e1 * e1;
        let half = Complex64::new(0.5, 0.0);
        let m = Mat2 {
            a: half * (1.0 + e2),
            b: half * (1.0 - e2) / n,
            c: half * (1.0 - e2) * n,
            d: half * (1.0 + e2),
        };
        total = total.mul(&m);
        phase *= e1;
    }
    let b = total.a + total.b;
    let c = total.c + total.d;
    phase * 2.0 / (b + c) * scatter
}

/// Textbook single-slab (Airy) transmission in air, used as an oracle:
/// `t = t01 t10 exp(i d) / (1 - r10^2 exp(2 i d))`.
pub fn single_slab_airy(n: Complex64, thickness_mm: f64, f_thz: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let t01 = 2.0 / (one + n);
    let t10 = 2.0 * n / (n + one);
    let r10 = (n - one) / (n + one);
    let delta = n * (TAU * f_thz * thickness_mm / C_MM_PER_PS);
    let e = (Complex64::i() * delta).exp();
    t01 * t10 * e / (one - r10 * r10 * e * e)
}
