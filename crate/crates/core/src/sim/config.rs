use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dielectric::{DielectricModel, DoubleDebye};
use super::pattern::DropletParams;
use super::pulse::PulseParams;
use super::tmm::{Layer, LayerStack, Roughness};
use crate::data::Orientation;
use crate::error::{Error, Result};

/// Two-layer leaf: a denser upper sub-slab and a spongier lower one. The
/// thickness-weighted mean water fraction equals `water_fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeafConfig {
    pub thickness_mm: f64,
    /// share of the thickness taken by the upper sub-slab
    pub upper_share: f64,
    pub water_fraction: f64,
    /// upper sub-slab water fraction minus the mean
    pub upper_excess: f64,
    pub dry_re: f64,
    pub dry_im: f64,
    /// Relative loss of leaf water over the whole set of series.
    pub drift_total: f64,
    pub bottom_roughness_mm: f64,
    pub roughness_contrast: f64,
    /// Droplet contact angle on the lower surface, used for BottomSide.
    pub bottom_contact_angle_deg: f64,
}

impl Default for LeafConfig {
    fn default() -> Self {
        Self {
            thickness_mm: 0.3,
            upper_share: 0.4,
            water_fraction: 0.45,
            upper_excess: 0.1,
            dry_re: 2.5,
            dry_im: 0.05,
            drift_total: 0.115,
            bottom_roughness_mm: 0.01,
            roughness_contrast: 0.8,
            bottom_contact_angle_deg: 90.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlasticConfig {
    pub thickness_mm: f64,
    pub n: f64,
    pub kappa: f64,
}

impl Default for PlasticConfig {
    fn default() -> Self {
        Self { thickness_mm: 0.08, n: 1.53, kappa: 0.003 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub n_series: u32,
    /// mean acquisitions per series, including the dry one
    pub acquisitions_per_series: f64,
    /// per-series count is drawn from `mean * U(1 - spread, 1 + spread)`
    pub acquisitions_spread: f64,
    pub series_id_offset: u32,
    pub orientation: Orientation,

    pub n_t: usize,
    /// ps
    pub span: f64,
    pub pad_factor: usize,
    pub pulse: PulseParams,

    /// run-off limit, mg
    pub max_g: f64,
    /// each series aims for a final mass in `[runoff_min_fraction, 1] * max_g`
    pub runoff_min_fraction: f64,
    pub increment_sigma_log: f64,
    /// mg, standard deviation of the scale reading
    pub gravimetric_noise: f64,

    /// g/m^3
    pub humidity_min: f64,
    pub humidity_max: f64,
    /// g/m^3 per acquisition, random-walk step
    pub humidity_step: f64,
    /// mm of humid air on the beam path
    pub vapor_path: f64,

    pub snr_db: f64,
    /// uniform jitter half-width in samples
    pub jitter_samples: f64,
    /// ps, standard deviation of the per-series delay offset
    pub series_delay_sd: f64,
    /// spread of the per-series median droplet diameter (log scale)
    pub droplet_size_spread: f64,

    pub beam_area: f64,
    pub water: DoubleDebye,
    pub leaf: LeafConfig,
    pub plastic: PlasticConfig,
    pub droplets: DropletParams,
    /// geometric water-thickness grid used to tabulate transfer functions
    pub thickness_bins: usize,
    pub thickness_min: f64,
    pub thickness_max: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_series: 39,
            acquisitions_per_series: 272.0,
            acquisitions_spread: 0.2,
            series_id_offset: 0,
            orientation: Orientation::TopSide,
            n_t: 760,
            span: 38.0,
            pad_factor: 4,
            pulse: PulseParams::default(),
            max_g: 25.0,
            runoff_min_fraction: 0.6,
            increment_sigma_log: 0.3,
            gravimetric_noise: 0.05,
            humidity_min: 8.0,
            humidity_max: 11.2,
            humidity_step: 0.02,
            vapor_path: 300.0,
            snr_db: 40.0,
            jitter_samples: 0.5,
            series_delay_sd: 0.1,
            droplet_size_spread: 0.15,
            beam_area: 300.0,
            water: DoubleDebye::WATER_25C,
            leaf: LeafConfig::default(),
            plastic: PlasticConfig::default(),
            droplets: DropletParams::default(),
            thickness_bins: 96,
            thickness_min: 1e-3,
            thickness_max: 4.0,
        }
    }
}

impl SimConfig {
    /// 39 top-side series averaging 272 acquisitions.
    pub fn paper_topside() -> Self {
        Self::default()
    }

    /// 5 bottom-side series averaging 300 acquisitions.
    pub fn paper_bottomside() -> Self {
        Self {
            seed: 2,
            n_series: 5,
            acquisitions_per_series: 300.2,
            series_id_offset: 1000,
            orientation: Orientation::BottomSide,
            ..Self::default()
        }
    }

    /// 20 series of 200 acquisitions.
    pub fn desk() -> Self {
        Self { n_series: 20, acquisitions_per_series: 200.0, acquisitions_spread: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("acquisitions_per_series", self.acquisitions_per_series),
            ("span", self.span),
            ("max_g", self.max_g),
            ("beam_area", self.beam_area),
            ("leaf.thickness_mm", self.leaf.thickness_mm),
            ("droplets.median_diameter", self.droplets.median_diameter),
            ("droplets.contact_angle_deg", self.droplets.contact_angle_deg),
            ("leaf.bottom_contact_angle_deg", self.leaf.bottom_contact_angle_deg),
            ("thickness_min", self.thickness_min),
            ("pulse.peak_freq", self.pulse.peak_freq),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("acquisitions_spread", self.acquisitions_spread),
            ("increment_sigma_log", self.increment_sigma_log),
            ("gravimetric_noise", self.gravimetric_noise),
            ("humidity_min", self.humidity_min),
            ("humidity_step", self.humidity_step),
            ("vapor_path", self.vapor_path),
            ("jitter_samples", self.jitter_samples),
            ("series_delay_sd", self.series_delay_sd),
            ("droplet_size_spread", self.droplet_size_spread),
            ("droplets.sigma_log", self.droplets.sigma_log),
            ("droplets.deposition_loss", self.droplets.deposition_loss),
            ("leaf.drift_total", self.leaf.drift_total),
            ("leaf.bottom_roughness_mm", self.leaf.bottom_roughness_mm),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.n_t < 64 {
            return Err(Error::invalid(format!("n_t must be at least 64, got {}", self.n_t)));
        }
        if self.pad_factor == 0 || self.thickness_bins < 2 || self.droplets.rings == 0 {
            return Err(Error::invalid("pad_factor, thickness_bins and droplets.rings must be positive"));
        }
        if self.droplets.contact_angle_deg > 90.0 || self.leaf.bottom_contact_angle_deg > 90.0 {
            return Err(Error::invalid("contact angles above 90 degrees are not supported"));
        }
        if self.humidity_max < self.humidity_min {
            return Err(Error::invalid("humidity_max < humidity_min"));
        }
        if self.thickness_max <= self.thickness_min {
            return Err(Error::invalid("thickness_max must exceed thickness_min"));
        }
        if !(0.0..=1.0).contains(&self.runoff_min_fraction)
            || !(0.0..1.0).contains(&self.acquisitions_spread)
            || !(0.0..=1.0).contains(&self.leaf.water_fraction)
            || !(0.0..1.0).contains(&self.leaf.upper_share)
            || !(0.0..1.0).contains(&self.droplets.deposition_loss)
            || !(0.0..=1.0).contains(&self.droplets.max_coverage)
            || self.leaf.drift_total >= 1.0
        {
            return Err(Error::invalid("a fraction parameter is outside [0, 1]"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn plastic_model(&self) -> DielectricModel {
        DielectricModel::ConstantIndex { n: self.plastic.n, kappa: self.plastic.kappa }
    }

    pub fn water_model(&self) -> DielectricModel {
        DielectricModel::DoubleDebyeWater(self.water)
    }

    /// Plastic, leaf sub-slabs and plastic, in beam order, for a leaf with
    /// mean water fraction `w`.
    /// Droplet parameters for the surface that faces the spray.
    pub fn droplet_params(&self) -> DropletParams {
        match self.orientation {
            Orientation::TopSide => self.droplets,
            Orientation::BottomSide => DropletParams { contact_angle_deg: self.leaf.bottom_contact_angle_deg, ..self.droplets },
        }
    }

    pub fn leaf_stack(&self, orientation: Orientation, w: f64) -> LayerStack {
        let leaf = &self.leaf;
        let t_up = leaf.thickness_mm * leaf.upper_share;
        let t_lo = leaf.thickness_mm - t_up;
        let w_up = (w + leaf.upper_excess).clamp(0.0, 1.0);
        let w_lo = ((w * leaf.thickness_mm - w_up * t_up) / t_lo).clamp(0.0, 1.0);
        let tissue = |wf: f64| DielectricModel::EffectiveLeaf {
            water_fraction: wf,
            dry_re: leaf.dry_re,
            dry_im: leaf.dry_im,
            water: self.water,
        };
        let upper = Layer::new(t_up, tissue(w_up));
        let lower = Layer::new(t_lo, tissue(w_lo));
        let (entry, exit) = match orientation {
            Orientation::TopSide => (upper, lower),
            Orientation::BottomSide => (
                lower.with_roughness(Roughness {
                    rms_mm: leaf.bottom_roughness_mm,
                    index_contrast: leaf.roughness_contrast,
                }),
                upper,
            ),
        };
        let plastic = Layer::new(self.plastic.thickness_mm, self.plastic_model());
        LayerStack::new(vec![plastic.clone(), entry, exit, plastic])
    }
}
