//! Droplet populations on the illuminated leaf area.
//!
//! Droplets are spherical caps with a fixed contact angle (at most 90°). For base radius
//! `r` and height `h = r tan(theta / 2)` the cap volume is
//! `V = pi h (3 r^2 + h^2) / 6`. For the optical mixture each cap is cut into
//! equal-width radial rings; a ring's thickness is its exact water volume
//! divided by its area, so ring volumes sum to the cap volume.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

/// mg per mm^3
pub const WATER_DENSITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Droplet {
    pub diameter_mm: f64,
    pub cap_height_mm: f64,
}

impl Droplet {
    pub fn from_diameter(diameter_mm: f64, contact_angle_deg: f64) -> Self {
        let t = (contact_angle_deg.to_radians() / 2.0).tan();
        Self { diameter_mm, cap_height_mm: 0.5 * diameter_mm * t }
    }

    pub fn from_volume(volume_mm3: f64, contact_angle_deg: f64) -> Self {
        let t = (contact_angle_deg.to_radians() / 2.0).tan();
        let r = (6.0 * volume_mm3 / (PI * t * (3.0 + t * t))).cbrt();
        Self { diameter_mm: 2.0 * r, cap_height_mm: r * t }
    }

    pub fn base_radius(&self) -> f64 {
        0.5 * self.diameter_mm
    }

    pub fn footprint(&self) -> f64 {
        PI * self.base_radius().powi(2)
    }

    pub fn volume(&self) -> f64 {
        let r = self.base_radius();
        let h = self.cap_height_mm;
        PI * h * (3.0 * r * r + h * h) / 6.0
    }

    /// `(area mm^2, mean thickness mm)` of `rings` equal-width annuli.
    pub fn rings(&self, rings: usize) -> Vec<(f64, f64)> {
        let r = self.base_radius();
        let h = self.cap_height_mm;
        if r <= 0.0 || h <= 0.0 || rings == 0 {
            return Vec::new();
        }
        let big_r = (r * r + h * h) / (2.0 * h);
        let offset = big_r - h;
        // volume of the cap inside radius rho
        let inner = |rho: f64| {
            let s = (big_r * big_r - rho * rho).max(0.0);
            2.0 * PI * (-(s * s.sqrt()) / 3.0 - offset * rho * rho / 2.0)
        };
        let base = inner(0.0);
        let mut out = Vec::with_capacity(rings);
        for j in 0..rings {
            let a = r * j as f64 / rings as f64;
            let b = r * (j + 1) as f64 / rings as f64;
            let area = PI * (b * b - a * a);
            let vol = (inner(b) - base) - (inner(a) - base);
            out.push((area, (vol / area).max(0.0)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropletParams {
    pub contact_angle_deg: f64,
    /// mm
    pub median_diameter: f64,
    pub sigma_log: f64,
    /// Fraction of each spray increment that can miss the beam area,
    /// drawn uniformly from `[0, deposition_loss]`.
    pub deposition_loss: f64,
    /// Coalescence keeps the wetted fraction below this value.
    pub max_coverage: f64,
    pub rings: usize,
}

impl Default for DropletParams {
    fn default() -> Self {
        Self {
            contact_angle_deg: 60.0,
            median_diameter: 0.5,
            sigma_log: 0.4,
            deposition_loss: 0.05,
            max_coverage: 0.95,
            rings: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletPattern {
    pub droplets: Vec<Droplet>,
    /// mm^2
    pub beam_area: f64,
}

impl DropletPattern {
    pub fn empty(beam_area: f64) -> Self {
        Self { droplets: Vec::new(), beam_area }
    }

    /// Water mass in mg.
    pub fn mass(&self) -> f64 {
        WATER_DENSITY * self.droplets.iter().map(Droplet::volume).sum::<f64>()
    }

    pub fn coverage(&self) -> f64 {
        self.droplets.iter().map(Droplet::footprint).sum::<f64>() / self.beam_area
    }

    /// Area fractions and water thicknesses of every ring of every droplet.
    pub fn coverage_fractions(&self, rings: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.droplets.len() * rings);
        for d in &self.droplets {
            for (area, t) in d.rings(rings) {
                out.push((area / self.beam_area, t));
            }
        }
        out
    }
}

/// Sprays `increment` mg onto `pattern`.
///
/// A share `U(0, deposition_loss)` of the increment misses the beam. The
/// rest arrives as droplets with log-normal diameters; a droplet landing on
/// wetted area (probability = current coverage) merges with an existing
/// droplet chosen in proportion to footprint. If coverage then exceeds
/// `max_coverage`, the smallest droplets coalesce into random neighbours.
pub fn sample_pattern_step(
    pattern: &DropletPattern,
    rng: &mut SplitMix64,
    increment: f64,
    params: &DropletParams,
) -> DropletPattern {
    let mut next = pattern.clone();
    let loss = rng.uniform(0.0, params.deposition_loss.max(0.0));
    let mut remaining = increment.max(0.0) * (1.0 - loss) / WATER_DENSITY;
    let theta = params.contact_angle_deg;
    while remaining > 1e-12 {
        let d = rng.lognormal(params.median_diameter, params.sigma_log);
        let mut v = Droplet::from_diameter(d, theta).volume();
        if v > remaining {
            v = remaining;
        }
        remaining -= v;
        let cov = next.coverage().min(1.0);
        if !next.droplets.is_empty() && rng.next_f64() < cov {
            let j = pick_by_footprint(&next.droplets, rng);
            let merged = next.droplets[j].volume() + v;
            next.droplets[j] = Droplet::from_volume(merged, theta);
        } else {
            next.droplets.push(Droplet::from_volume(v, theta));
        }
    }
    while next.coverage() > params.max_coverage && next.droplets.len() > 1 {
        let small = next
            .droplets
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.volume().total_cmp(&b.1.volume()))
            .map(|(i, _)| i)
            .unwrap();
        let drop = next.droplets.swap_remove(small);
        let j = pick_by_footprint(&next.droplets, rng);
        let merged = next.droplets[j].volume() + drop.volume();
        next.droplets[j] = Droplet::from_volume(merged, theta);
    }
    next
}

fn pick_by_footprint(droplets: &[Droplet], rng: &mut SplitMix64) -> usize {
    let total: f64 = droplets.iter().map(Droplet::footprint).sum();
    let mut u = rng.next_f64() * total;
    for (i, d) in droplets.iter().enumerate() {
        u -= d.footprint();
        if u < 0.0 {
            return i;
        }
    }
    droplets.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hemisphere_volume() {
        // 90 degrees: h = r, V = 2/3 pi r^3
        let d = Droplet::from_diameter(2.0, 90.0);
        assert!((d.cap_height_mm - 1.0).abs() < 1e-12);
        assert!((d.volume() - 2.0 / 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn volume_round_trip() {
        let d = Droplet::from_diameter(0.7, 60.0);
        let e = Droplet::from_volume(d.volume(), 60.0);
        assert!((e.diameter_mm - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_plus_increment() {
        let mut rng = SplitMix64::new(3);
        let p = sample_pattern_step(&DropletPattern::empty(300.0), &mut rng, 1.0, &DropletParams::default());
        assert!(p.mass() <= 1.0 + 1e-12);
        assert!(p.mass() >= 0.95 - 1e-12);
    }

    #[test]
    fn repeated_steps_monotone_and_capped() {
        let mut rng = SplitMix64::new(11);
        let params = DropletParams::default();
        let mut p = DropletPattern::empty(300.0);
        let mut last = 0.0;
        for _ in 0..200 {
            p = sample_pattern_step(&p, &mut rng, 0.12, &params);
            assert!(p.mass() > last);
            assert!(p.coverage() <= params.max_coverage + 1e-12 || p.droplets.len() == 1);
            last = p.mass();
        }
    }

    proptest! {
        #[test]
        fn rings_conserve_volume(d in 0.01f64..3.0, theta in 5.0f64..=90.0, k in 1usize..8) {
            let drop = Droplet::from_diameter(d, theta);
            let rings = drop.rings(k);
            let vol: f64 = rings.iter().map(|(a, t)| a * t).sum();
            let area: f64 = rings.iter().map(|(a, _)| a).sum();
            prop_assert!((vol - drop.volume()).abs() <= 1e-9 * drop.volume());
            prop_assert!((area - drop.footprint()).abs() <= 1e-12 * drop.footprint().max(1.0));
            // thickness decreases outward
            for w in rings.windows(2) {
                prop_assert!(w[0].1 >= w[1].1);
            }
        }
    }
}
