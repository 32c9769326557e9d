//! Complex permittivity of the materials in the leaf sandwich.
//!
//! Sign convention: fields vary as `exp(-i omega t)`, so a lossy medium has
//! `Im(eps) > 0` and refractive index `n + i kappa` with `kappa >= 0`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Speed of light in mm/ps.
pub const C_MM_PER_PS: f64 = 0.299_792_458;

/// Two-term Debye relaxation model.
///
/// `eps(f) = eps_inf + (eps_s - eps_1) / (1 - i w tau_1) + (eps_1 - eps_inf) / (1 - i w tau_2)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleDebye {
    pub eps_static: f64,
    pub eps_mid: f64,
    pub eps_inf: f64,
    /// ps
    pub tau_slow: f64,
    /// ps
    pub tau_fast: f64,
}

impl DoubleDebye {
    /// Liquid water at 25 °C (Kindt & Schmuttenmaer, J. Phys. Chem. 100, 10373).
    pub const WATER_25C: DoubleDebye =
        DoubleDebye { eps_static: 78.36, eps_mid: 4.93, eps_inf: 3.48, tau_slow: 8.24, tau_fast: 0.18 };

    pub fn permittivity(&self, f_thz: f64) -> Complex64 {
        let w = TAU * f_thz;
        let i = Complex64::i();
        let slow = (self.eps_static - self.eps_mid) / (1.0 - i * w * self.tau_slow);
        let fast = (self.eps_mid - self.eps_inf) / (1.0 - i * w * self.tau_fast);
        self.eps_inf + slow + fast
    }
}

impl Default for DoubleDebye {
    fn default() -> Self {
        Self::WATER_25C
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DielectricModel {
    DoubleDebyeWater(DoubleDebye),
    /// Linear volume mix of water and dry plant matter.
    EffectiveLeaf {
        water_fraction: f64,
        dry_re: f64,
        dry_im: f64,
        water: DoubleDebye,
    },
    ConstantIndex {
        n: f64,
        kappa: f64,
    },
}

impl DielectricModel {
    pub fn water() -> Self {
        DielectricModel::DoubleDebyeWater(DoubleDebye::WATER_25C)
    }

    /// Leaf tissue with the default dry-matter permittivity 2.5 + 0.05i.
    pub fn leaf(water_fraction: f64) -> Self {
        DielectricModel::EffectiveLeaf { water_fraction, dry_re: 2.5, dry_im: 0.05, water: DoubleDebye::WATER_25C }
    }

    pub fn vacuum() -> Self {
        DielectricModel::ConstantIndex { n: 1.0, kappa: 0.0 }
    }

    pub fn permittivity(&self, f_thz: f64) -> Complex64 {
        match *self {
            DielectricModel::DoubleDebyeWater(p) => p.permittivity(f_thz),
            DielectricModel::EffectiveLeaf { water_fraction, dry_re, dry_im, water } => {
                let w = water_fraction.clamp(0.0, 1.0);
                water.permittivity(f_thz) * w + Complex64::new(dry_re, dry_im) * (1.0 - w)
            }
            DielectricModel::ConstantIndex { n, kappa } => {
                let m = Complex64::new(n, kappa);
                m * m
            }
        }
    }

    /// Principal square root of the permittivity (non-negative imaginary part).
    pub fn refractive_index(&self, f_thz: f64) -> Complex64 {
        if let DielectricModel::ConstantIndex { n, kappa } = *self {
            return Complex64::new(n, kappa);
        }
        self.permittivity(f_thz).sqrt()
    }

    /// Power absorption coefficient in 1/cm.
    pub fn absorption_per_cm(&self, f_thz: f64) -> f64 {
        let kappa = self.refractive_index(f_thz).im;
        // 2 omega kappa / c in 1/mm, times 10 mm/cm
        2.0 * TAU * f_thz * kappa / C_MM_PER_PS * 10.0
    }
}

/// Convenience form of [`DielectricModel::permittivity`].
pub fn permittivity(model: &DielectricModel, f_thz: f64) -> Complex64 {
    model.permittivity(f_thz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_unity() {
        for f in [0.1, 1.0, 2.7] {
            let e = DielectricModel::vacuum().permittivity(f);
            assert_eq!(e, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn debye_static_limit() {
        let e = DielectricModel::water().permittivity(1e-9);
        assert!((e.re - 78.36).abs() < 1e-6);
        assert!(e.im.abs() < 1e-5);
    }

    #[test]
    fn water_absorption_at_one_thz_matches_literature_band() {
        // Independent evaluation of the same parameter set by hand:
        // eps(1 THz) = 4.1436 + 2.1374i, kappa = 0.5093, alpha = 213.5 /cm.
        let e = DielectricModel::water().permittivity(1.0);
        assert!((e.re - 4.1436).abs() < 1e-3, "{e}");
        assert!((e.im - 2.1374).abs() < 1e-3, "{e}");
        let alpha = DielectricModel::water().absorption_per_cm(1.0);
        assert!((alpha - 213.5).abs() < 0.5, "{alpha}");
        assert!((200.0..=250.0).contains(&alpha));
    }

    #[test]
    fn passive_everywhere() {
        let models = [
            DielectricModel::water(),
            DielectricModel::leaf(0.0),
            DielectricModel::leaf(0.5),
            DielectricModel::leaf(1.0),
            DielectricModel::ConstantIndex { n: 1.53, kappa: 0.003 },
        ];
        for m in models {
            for k in 1..=300 {
                let f = k as f64 * 0.01;
                assert!(m.permittivity(f).im >= 0.0);
                assert!(m.refractive_index(f).im >= 0.0);
            }
        }
    }

    #[test]
    fn serde_tagged() {
        let m = DielectricModel::leaf(0.4);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\":\"effective_leaf\""));
        let back: DielectricModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
