//! Polynomial-order search, permutation importance and recursive feature
//! elimination.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_onsets, fit_window_polynomial, OnsetConfig, WindowSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;
use crate::tree::{fit_bagged, Regressor, TreeParams};

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrderSearch {
    pub order_range: Vec<usize>,
    pub tree_params: TreeParams,
    pub seed: u64,
}

impl Default for OrderSearch {
    fn default() -> Self {
        Self { order_range: (0..=20).collect(), tree_params: TreeParams::default(), seed: 0 }
    }
}

/// Per-window order selection by validation L2 loss of a bagged-tree model.
///
/// One pass of coordinate descent over windows in order; every other window
/// keeps its current order from `spec`. Ties go to the smaller order.
/// Returns the chosen orders and `(window, order, loss)` for every candidate.
pub fn grid_search_poly_order(
    train: &Dataset,
    val: &Dataset,
    spec: &WindowSpec,
    onset: &OnsetConfig,
    search: &OrderSearch,
) -> Result<(Vec<usize>, Vec<(usize, usize, f64)>)> {
    spec.validate()?;
    if search.order_range.is_empty() {
        return Err(Error::EmptyInput("order range"));
    }
    if let Some(&n) = search.order_range.iter().find(|&&n| n > 20) {
        return Err(Error::invalid(format!("order {n} outside [0, 20]")));
    }
    if val.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let on_tr = compute_onsets(train, onset)?;
    let on_va = compute_onsets(val, onset)?;
    let y_tr = train.g_values();
    let y_va = val.g_values();

    let block = |ds: &Dataset, onsets: &[f64], m: usize, n: usize| -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = ds
            .records()
            .par_iter()
            .zip(onsets)
            .map(|(r, &t)| fit_window_polynomial(&r.trace, spec.window_at(m, t), n))
            .collect::<Result<_>>()?;
        Matrix::from_rows(&rows).or_else(|_| Ok(Matrix::zeros(0, n + 1)))
    };
    let tail = |ds: &Dataset, onsets: &[f64]| -> Result<Matrix> {
        Matrix::from_rows(&ds.records().iter().zip(onsets).map(|(r, &t)| vec![t, r.a]).collect::<Vec<_>>())
    };

    let n_windows = spec.orders.len();
    let mut orders = spec.orders.clone();
    let mut blocks_tr = Vec::with_capacity(n_windows);
    let mut blocks_va = Vec::with_capacity(n_windows);
    for (m, &n) in orders.iter().enumerate() {
        blocks_tr.push(block(train, &on_tr, m, n)?);
        blocks_va.push(block(val, &on_va, m, n)?);
    }
    let tail_tr = tail(train, &on_tr)?;
    let tail_va = tail(val, &on_va)?;
    let assemble = |blocks: &[Matrix], t: &Matrix| -> Result<Matrix> {
        blocks.iter().try_fold(Matrix::zeros(t.rows(), 0), |acc, b| acc.hstack(b))?.hstack(t)
    };

    let mut history = Vec::new();
    for m in 0..n_windows {
        let losses: Vec<(usize, f64, Matrix, Matrix)> = search
            .order_range
            .par_iter()
            .map(|&n| {
                let b_tr = block(train, &on_tr, m, n)?;
                let b_va = block(val, &on_va, m, n)?;
                let mut c_tr = blocks_tr.clone();
                let mut c_va = blocks_va.clone();
                c_tr[m] = b_tr.clone();
                c_va[m] = b_va.clone();
                let seed = SplitMix64::new(search.seed).substream((m * 32 + n) as u64).next_u64();
                let model = fit_bagged(&assemble(&c_tr, &tail_tr)?, &y_tr, &search.tree_params, seed)?;
                let loss = mse(&model.predict(&assemble(&c_va, &tail_va)?), &y_va);
                Ok((n, loss, b_tr, b_va))
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (i, l) in losses.iter().enumerate() {
            history.push((m, l.0, l.1));
            let b = &losses[best];
            let tol = 1e-12 * b.1.abs().max(l.1.abs());
            if l.1 < b.1 - tol || ((l.1 - b.1).abs() <= tol && l.0 < b.0) {
                best = i;
            }
        }
        let (n, _, b_tr, b_va) = losses.into_iter().nth(best).expect("non-empty range");
        orders[m] = n;
        blocks_tr[m] = b_tr;
        blocks_va[m] = b_va;
    }
    Ok((orders, history))
}

/// Mean increase of the L2 loss when one column is shuffled, per column.
pub fn permutation_importance(
    model: &dyn Regressor,
    x: &Matrix,
    y: &[f64],
    n_repeats: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<f64>> {
    if x.cols() != model.n_features() {
        return Err(Error::ShapeMismatch { expected: model.n_features(), actual: x.cols() });
    }
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch { expected: x.rows(), actual: y.len() });
    }
    if y.is_empty() || n_repeats == 0 {
        return Err(Error::EmptyInput("permutation importance needs rows and repeats"));
    }
    let baseline = mse(&model.predict(x), y);
    let base = SplitMix64::new(rng.next_u64());
    Ok((0..x.cols())
        .into_par_iter()
        .map(|f| {
            let mut r = base.substream(f as u64);
            let col = x.column(f);
            let mut xp = x.clone();
            let mut total = 0.0;
            for _ in 0..n_repeats {
                let perm = r.permutation(col.len());
                for (i, &p) in perm.iter().enumerate() {
                    xp.set(i, f, col[p]);
                }
                total += mse(&model.predict(&xp), y) - baseline;
            }
            total / n_repeats as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfeConfig {
    pub tree_params: TreeParams,
    /// share of rows held out to score each feature set
    pub val_fraction: f64,
    pub n_repeats: usize,
    /// relative loss increase still accepted when dropping a feature
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for RfeConfig {
    fn default() -> Self {
        Self { tree_params: TreeParams::default(), val_fraction: 0.2, n_repeats: 5, tolerance: 0.005, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeStep {
    pub mask: Vec<bool>,
    pub val_loss: f64,
    /// column dropped to reach this step
    pub removed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeTrace {
    pub steps: Vec<RfeStep>,
    /// loss of predicting the training mean
    pub baseline_loss: f64,
    pub mask: Vec<bool>,
}

/// Drops the least important column, refits and rescores on an internal
/// hold-out, as long as the loss grows by less than `tolerance` relative to
/// the previous step. The returned mask is the visited step of minimum loss.
/// When no visited step beats the training-mean predictor, elimination runs
/// down to the single best feature.
pub fn recursive_feature_elimination(x: &Matrix, y: &[f64], cfg: &RfeConfig) -> Result<RfeTrace> {
    let f = x.cols();
    if f < 2 {
        return Err(Error::invalid(format!("RFE needs at least 2 features, got {f}")));
    }
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch { expected: x.rows(), actual: y.len() });
    }
    if !(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) || !(cfg.tolerance >= 0.0) {
        return Err(Error::invalid("val_fraction must be in (0, 1) and tolerance non-negative"));
    }
    let root = SplitMix64::new(cfg.seed);
    let perm = root.substream(0).permutation(x.rows());
    let n_val = ((x.rows() as f64 * cfg.val_fraction).round() as usize).clamp(1, x.rows().saturating_sub(1));
    if n_val == 0 || n_val >= x.rows() {
        return Err(Error::EmptyInput("RFE needs at least 2 rows"));
    }
    let (va, tr) = perm.split_at(n_val);
    let x_tr = x.select_rows(tr);
    let x_va = x.select_rows(va);
    let y_tr: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
    let y_va: Vec<f64> = va.iter().map(|&i| y[i]).collect();
    let mean = y_tr.iter().sum::<f64>() / y_tr.len() as f64;
    let baseline_loss = mse(&vec![mean; y_va.len()], &y_va);

    let score = |active: &[usize], step: u64| -> Result<(f64, crate::tree::TreeEnsemble)> {
        let seed = root.substream(1 + 2 * step).next_u64();
        let model = fit_bagged(&x_tr.select_cols(active), &y_tr, &cfg.tree_params, seed)?;
        let loss = mse(&model.predict(&x_va.select_cols(active)), &y_va);
        Ok((loss, model))
    };
    let to_mask = |active: &[usize]| {
        let mut m = vec![false; f];
        for &i in active {
            m[i] = true;
        }
        m
    };

    let mut active: Vec<usize> = (0..f).collect();
    let (mut loss, mut model) = score(&active, 0)?;
    let mut steps = vec![RfeStep { mask: to_mask(&active), val_loss: loss, removed: None }];
    let mut accepted = 1;
    let mut stopped = false;
    let mut step = 0u64;
    while active.len() > 1 {
        step += 1;
        let mut rng = root.substream(2 * step);
        let imp = permutation_importance(&model, &x_va.select_cols(&active), &y_va, cfg.n_repeats, &mut rng)?;
        let mut weakest = 0;
        for (i, v) in imp.iter().enumerate() {
            if *v < imp[weakest] {
                weakest = i;
            }
        }
        let removed = active.remove(weakest);
        let (next_loss, next_model) = score(&active, step)?;
        steps.push(RfeStep { mask: to_mask(&active), val_loss: next_loss, removed: Some(removed) });
        if !stopped && next_loss > loss * (1.0 + cfg.tolerance) {
            stopped = true;
        }
        if !stopped {
            accepted = steps.len();
        }
        loss = next_loss;
        model = next_model;
        if stopped {
            let best = steps[..accepted].iter().map(|s| s.val_loss).fold(f64::INFINITY, f64::min);
            if best < baseline_loss * (1.0 - cfg.tolerance) {
                break;
            }
        }
    }
    let best_accepted = steps[..accepted]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.val_loss.total_cmp(&b.1.val_loss).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("at least the full set");
    let mask = if steps[best_accepted].val_loss < baseline_loss * (1.0 - cfg.tolerance) {
        steps[best_accepted].mask.clone()
    } else {
        steps.last().expect("non-empty").mask.clone()
    };
    Ok(RfeTrace { steps, baseline_loss, mask })
}
