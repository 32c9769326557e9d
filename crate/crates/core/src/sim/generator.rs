use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::SimConfig;
use super::dielectric::DielectricModel;
use super::pattern::{sample_pattern_step, DropletParams, DropletPattern};
use super::propagate::Propagator;
use super::tmm::{Layer, LayerStack};
use super::vapor::{default_lines, VaporLine};
use crate::data::{Dataset, Provenance, SampleRecord, TimeBase, TimeTrace};
use crate::error::Result;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    /// standard deviation of the additive white noise, field units
    pub sigma: f64,
    /// half-width of the uniform timing jitter, samples
    pub jitter_samples: f64,
}

impl NoiseParams {
    pub const NONE: NoiseParams = NoiseParams { sigma: 0.0, jitter_samples: 0.0 };
}

/// Everything between the emitter and the detector except the water pattern.
#[derive(Debug)]
pub struct Scene {
    pub propagator: Propagator,
    /// plastic, leaf and plastic; the water layer is prepended per thickness
    pub leaf_stack: LayerStack,
    pub water: DielectricModel,
    pub lines: Vec<VaporLine>,
    pub vapor_path: f64,
    /// ps, fixed delay added to every trace
    pub delay: f64,
    pub rings: usize,
}

impl Scene {
    pub fn new(propagator: Propagator, leaf_stack: LayerStack) -> Self {
        Self {
            propagator,
            leaf_stack,
            water: DielectricModel::water(),
            lines: default_lines(),
            vapor_path: 300.0,
            delay: 0.0,
            rings: 4,
        }
    }

    pub fn from_config(cfg: &SimConfig, leaf_stack: LayerStack) -> Self {
        let pulse = cfg.pulse.synthesize(cfg.n_t, TimeBase::with_span(cfg.n_t, cfg.span).dt);
        Self {
            propagator: Propagator::new(&pulse, cfg.pad_factor),
            leaf_stack,
            water: cfg.water_model(),
            lines: default_lines(),
            vapor_path: cfg.vapor_path,
            delay: 0.0,
            rings: cfg.droplets.rings,
        }
    }

    pub fn wet_stack(&self, d: f64) -> LayerStack {
        let mut layers = Vec::with_capacity(self.leaf_stack.layers.len() + 1);
        layers.push(Layer::new(d, self.water));
        layers.extend(self.leaf_stack.layers.iter().cloned());
        LayerStack::new(layers)
    }

    pub fn wet_transfer(&self, d: f64) -> Vec<Complex64> {
        self.propagator.stack_transfer(&self.wet_stack(d))
    }

    pub fn dry_transfer(&self) -> Vec<Complex64> {
        self.propagator.stack_transfer(&self.leaf_stack)
    }

    /// Area-weighted transfer `sum f_j T(d_j) + (1 - sum f_j) T_dry`.
    pub fn mixture_transfer(&self, coverage: &[(f64, f64)]) -> Vec<Complex64> {
        let dry = self.dry_transfer();
        let covered: f64 = coverage.iter().map(|c| c.0).sum();
        let mut h: Vec<Complex64> = dry.iter().map(|t| t * (1.0 - covered)).collect();
        for &(f, d) in coverage {
            for (x, t) in h.iter_mut().zip(self.wet_transfer(d)) {
                *x += t * f;
            }
        }
        h
    }

    /// Applies humidity, delay, jitter and noise to a stack transfer
    /// function and renders the trace.
    pub fn render(&self, transfer: &[Complex64], a: f64, noise: &NoiseParams, rng: &mut SplitMix64) -> TimeTrace {
        let dt = self.propagator.dt();
        let jitter = if noise.jitter_samples > 0.0 {
            rng.uniform(-noise.jitter_samples, noise.jitter_samples) * dt
        } else {
            0.0
        };
        let tau = self.delay + jitter;
        let freqs = self.propagator.freqs();
        let active = self.propagator.active_bins();
        let mut h = transfer.to_vec();
        let vapor = self.propagator.vapor_transfer(&self.lines, a, self.vapor_path);
        for k in 0..active {
            h[k] *= vapor[k] * Complex64::from_polar(1.0, TAU * freqs[k] * tau);
        }
        let mut x = self.propagator.render(&h);
        if noise.sigma > 0.0 {
            for v in &mut x {
                *v += noise.sigma * rng.normal();
            }
        }
        TimeTrace::from_f64(&x, dt, 0.0).expect("finite trace")
    }

    pub fn trace_from_coverage(
        &self,
        coverage: &[(f64, f64)],
        a: f64,
        noise: &NoiseParams,
        rng: &mut SplitMix64,
    ) -> TimeTrace {
        self.render(&self.mixture_transfer(coverage), a, noise, rng)
    }

    pub fn trace_from_pattern(
        &self,
        pattern: &DropletPattern,
        a: f64,
        noise: &NoiseParams,
        rng: &mut SplitMix64,
    ) -> TimeTrace {
        self.trace_from_coverage(&pattern.coverage_fractions(self.rings), a, noise, rng)
    }
}

/// Free-function form of [`Scene::trace_from_pattern`].
pub fn trace_from_pattern(
    pattern: &DropletPattern,
    scene: &Scene,
    a: f64,
    noise: &NoiseParams,
    rng: &mut SplitMix64,
) -> TimeTrace {
    scene.trace_from_pattern(pattern, a, noise, rng)
}

/// Transfer functions tabulated on a geometric water-thickness grid.
///
/// A ring of thickness `d` between grid points is split linearly between
/// its two neighbours, which preserves both covered area and water volume.
/// Thicknesses below the first grid point are split with the dry stack;
/// thicker rings are clamped to the last (opaque) grid point.
#[derive(Debug)]
pub struct ThicknessTable {
    grid: Vec<f64>,
    log_ratio: f64,
    dry: Vec<Complex64>,
    wet: Vec<Vec<Complex64>>,
}

impl ThicknessTable {
    pub fn new(scene: &Scene, bins: usize, d_min: f64, d_max: f64) -> Self {
        let log_ratio = (d_max / d_min).ln() / (bins - 1) as f64;
        let grid: Vec<f64> = (0..bins).map(|k| d_min * (log_ratio * k as f64).exp()).collect();
        let wet = grid.iter().map(|&d| scene.wet_transfer(d)).collect();
        Self { grid, log_ratio, dry: scene.dry_transfer(), wet }
    }

    /// Weights per grid point; the dry weight is one minus their sum.
    pub fn weights(&self, coverage: &[(f64, f64)]) -> Vec<f64> {
        let mut w = vec![0.0; self.grid.len()];
        let last = self.grid.len() - 1;
        for &(f, d) in coverage {
            if d <= 0.0 || f <= 0.0 {
                continue;
            }
            if d < self.grid[0] {
                w[0] += f * d / self.grid[0];
            } else if d >= self.grid[last] {
                w[last] += f;
            } else {
                let k = (((d / self.grid[0]).ln() / self.log_ratio).floor() as usize).min(last - 1);
                let (lo, hi) = (self.grid[k], self.grid[k + 1]);
                let lam = ((d - lo) / (hi - lo)).clamp(0.0, 1.0);
                w[k] += f * (1.0 - lam);
                w[k + 1] += f * lam;
            }
        }
        w
    }

    pub fn mix(&self, coverage: &[(f64, f64)]) -> Vec<Complex64> {
        let w = self.weights(coverage);
        let wet_total: f64 = w.iter().sum();
        let mut h: Vec<Complex64> = self.dry.iter().map(|t| t * (1.0 - wet_total)).collect();
        for (wk, tk) in w.iter().zip(&self.wet) {
            if *wk == 0.0 {
                continue;
            }
            for (x, t) in h.iter_mut().zip(tk) {
                *x += t * *wk;
            }
        }
        h
    }
}

/// Generates the full series-structured dataset described by `cfg`.
pub fn generate_dataset(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    let tb = TimeBase::with_span(cfg.n_t, cfg.span);
    let master = SplitMix64::new(cfg.seed);
    let series: Vec<Vec<SampleRecord>> =
        (0..cfg.n_series).into_par_iter().map(|s| generate_series(cfg, s, master.substream(s as u64))).collect();
    let records = series.into_iter().flatten().collect();
    let provenance = Provenance {
        note: format!("synthetic {:?} seed {} series {}", cfg.orientation, cfg.seed, cfg.n_series),
        config_hash: cfg.hash(),
    };
    Dataset::new(tb, records, provenance)
}

fn generate_series(cfg: &SimConfig, s: u32, mut rng: SplitMix64) -> Vec<SampleRecord> {
    let n_series = cfg.n_series.max(1) as f64;
    let w_leaf = cfg.leaf.water_fraction * (1.0 - cfg.leaf.drift_total * s as f64 / n_series);
    let mut scene = Scene::from_config(cfg, cfg.leaf_stack(cfg.orientation, w_leaf));
    scene.delay = cfg.series_delay_sd * rng.normal();
    let table = ThicknessTable::new(&scene, cfg.thickness_bins, cfg.thickness_min, cfg.thickness_max);

    let droplets = DropletParams {
        median_diameter: cfg.droplets.median_diameter * (cfg.droplet_size_spread * rng.normal()).exp(),
        ..cfg.droplet_params()
    };
    let spread = cfg.acquisitions_spread;
    let n_acq = (cfg.acquisitions_per_series * rng.uniform(1.0 - spread, 1.0 + spread)).round().max(1.0) as u32;
    let target = cfg.max_g * rng.uniform(cfg.runoff_min_fraction, 1.0);
    let mean_inc = target / (n_acq.saturating_sub(1)).max(1) as f64;
    let mut a = rng.uniform(cfg.humidity_min, cfg.humidity_max);

    let dry_peak = scene.render(&table.mix(&[]), a, &NoiseParams::NONE, &mut rng).max();
    let noise = NoiseParams { sigma: dry_peak * 10f64.powf(-cfg.snr_db / 20.0), jitter_samples: cfg.jitter_samples };

    let sig = cfg.increment_sigma_log;
    let mut pattern = DropletPattern::empty(cfg.beam_area);
    let mut sprayed = 0.0;
    let mut out = Vec::with_capacity(n_acq as usize);
    for i in 0..n_acq {
        if i > 0 {
            let inc = mean_inc * (sig * rng.normal() - 0.5 * sig * sig).exp();
            if sprayed + inc > cfg.max_g {
                break;
            }
            sprayed += inc;
            pattern = sample_pattern_step(&pattern, &mut rng, inc, &droplets);
            a = (a + cfg.humidity_step * rng.normal()).clamp(cfg.humidity_min, cfg.humidity_max);
        }
        let h = table.mix(&pattern.coverage_fractions(scene.rings));
        let trace = scene.render(&h, a, &noise, &mut rng);
        let g_b = if i == 0 { 0.0 } else { (sprayed + cfg.gravimetric_noise * rng.normal()).max(0.0) };
        out.push(SampleRecord {
            trace,
            g_b,
            a,
            series_id: cfg.series_id_offset + s,
            acq_index: i,
            orientation: cfg.orientation,
        });
    }
    out
}
