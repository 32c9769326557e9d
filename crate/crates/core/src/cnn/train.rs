use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{CnnModel, Normalization};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// share of the training set held out for validation
    pub val_fraction: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 300, batch_size: 128, val_fraction: 0.1, adam: AdamConfig::default(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size < 2 {
            return Err(Error::invalid("epochs must be positive and batch_size at least 2"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::invalid("val_fraction must be in [0, 1)"));
        }
        if !(self.adam.learning_rate >= 0.0) {
            return Err(Error::invalid("learning_rate must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when there is no validation split
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CnnModel,
    /// snapshot with the lowest validation loss (the final model without a
    /// validation split)
    pub best: CnnModel,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss\n");
    for h in history {
        s.push_str(&format!("{},{:e},{:e}\n", h.epoch, h.train_loss, h.val_loss));
    }
    s
}

fn mse(model: &CnnModel, ds: &Dataset, idx: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for &i in idx {
        let r = &ds.records()[i];
        total += (model.predict(&r.trace, r.a)? - r.g_b).powi(2);
    }
    Ok(total / idx.len() as f64)
}

/// Mini-batch Adam on the squared error.
///
/// The first `val_fraction` of a seeded permutation is held out. Normalization
/// statistics come from the remaining rows. Each epoch reshuffles the
/// training rows with substream `epoch + 1`; a trailing batch of one row is
/// skipped because batch statistics need two.
pub fn train(mut model: CnnModel, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = ds.len();
    let root = SplitMix64::new(cfg.seed);
    let perm = root.substream(0).permutation(n);
    let n_val = (n as f64 * cfg.val_fraction).round() as usize;
    let (val_idx, train_idx) = perm.split_at(n_val);
    if train_idx.len() < 2 {
        return Err(Error::EmptyInput("CNN training needs at least 2 training rows"));
    }
    let a_train: Vec<f64> = train_idx.iter().map(|&i| ds.records()[i].a).collect();
    model.norm = Normalization::from_training(&a_train);

    let mut state = AdamState::new(model.params.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut order = train_idx.to_vec();
    for epoch in 0..cfg.epochs {
        root.substream(epoch as u64 + 1).shuffle(&mut order);
        let mut sum = 0.0;
        let mut count = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            if batch.len() < 2 {
                continue;
            }
            let traces: Vec<&[f32]> = batch.iter().map(|&i| ds.records()[i].trace.samples.as_slice()).collect();
            let a: Vec<f64> = batch.iter().map(|&i| ds.records()[i].a).collect();
            let g: Vec<f64> = batch.iter().map(|&i| ds.records()[i].g_b).collect();
            let (loss, grad, cache) = model.loss_and_gradient(&traces, &a, &g)?;
            if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("training loss diverged in epoch {epoch} (loss {loss})")));
            }
            model.update_running_stats(&cache);
            adam_step(&mut model.params, &grad, &mut state, &cfg.adam)?;
            sum += loss * batch.len() as f64;
            count += batch.len();
        }
        let train_loss = sum / count.max(1) as f64;
        let val_loss = if val_idx.is_empty() { f64::NAN } else { mse(&model, ds, val_idx)? };
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss diverged in epoch {epoch}")));
        }
        history.push(EpochRecord { epoch, train_loss, val_loss });
        let score = if val_idx.is_empty() { train_loss } else { val_loss };
        if score < best_loss || epoch == 0 {
            best_loss = score;
            best = model.clone();
            best_epoch = epoch;
        }
    }
    Ok(TrainOutcome { model, best, best_epoch, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::CnnArch;
    use crate::data::{Orientation, Provenance, SampleRecord, TimeBase, TimeTrace};

    fn tiny_dataset(n: usize, len: usize) -> Dataset {
        let mut rng = SplitMix64::new(5);
        let tb = TimeBase { n_t: len, dt: 0.05, t0: 0.0 };
        let records = (0..n)
            .map(|i| {
                let g = rng.uniform(0.0, 5.0);
                let samples: Vec<f64> =
                    (0..len).map(|k| (-(k as f64 - 10.0).powi(2) / 8.0).exp() * (1.0 - 0.1 * g) + 0.05 * rng.normal()).collect();
                SampleRecord {
                    trace: TimeTrace::from_f64(&samples, 0.05, 0.0).unwrap(),
                    g_b: g,
                    a: rng.uniform(8.0, 11.0),
                    series_id: 0,
                    acq_index: i as u32,
                    orientation: Orientation::TopSide,
                }
            })
            .collect();
        Dataset::new(tb, records, Provenance::default()).unwrap()
    }

    fn small_arch() -> CnnArch {
        CnnArch { input_len: 32, channels: vec![4, 8], hidden: vec![16, 8], ..CnnArch::default() }
    }

    #[test]
    fn zero_learning_rate_keeps_trainables() {
        let ds = tiny_dataset(40, 32);
        let m = CnnModel::new(small_arch(), 1).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 8,
            adam: AdamConfig { learning_rate: 0.0, ..AdamConfig::default() },
            ..TrainConfig::default()
        };
        let out = train(m.clone(), &ds, &cfg).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.model.params, m.params);
    }

    #[test]
    fn overfits_tiny_set() {
        let ds = tiny_dataset(64, 32);
        let m = CnnModel::new(small_arch(), 2).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 16,
            val_fraction: 0.0,
            adam: AdamConfig { learning_rate: 3e-3, ..AdamConfig::default() },
            ..TrainConfig::default()
        };
        let mut probe = m.clone();
        probe.norm = Normalization::from_training(&ds.a_values());
        let traces: Vec<&[f32]> = ds.records().iter().map(|r| r.trace.samples.as_slice()).collect();
        let first = probe.loss_and_gradient(&traces, &ds.a_values(), &ds.g_values()).unwrap().0;
        let out = train(m, &ds, &cfg).unwrap();
        let last = out.history.last().unwrap().train_loss;
        assert!(last < 0.01 * first, "{first} -> {last}");
    }

    #[test]
    fn seeded_rerun_is_identical() {
        let ds = tiny_dataset(48, 32);
        let cfg = TrainConfig { epochs: 3, batch_size: 8, seed: 9, ..TrainConfig::default() };
        let a = train(CnnModel::new(small_arch(), 3).unwrap(), &ds, &cfg).unwrap();
        let b = train(CnnModel::new(small_arch(), 3).unwrap(), &ds, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best.params, b.best.params);
        assert!(history_csv(&a.history).starts_with("epoch,train_loss,val_loss\n0,"));
    }
}
