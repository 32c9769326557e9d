use serde::{Deserialize, Serialize};

use super::ensemble::fit_bagged;
use super::{MaxFeatures, Regressor, TreeParams};
use crate::data::kfold_indices;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Candidate values; every combination is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub n_samples_per_tree: Vec<usize>,
    #[serde(with = "crate::serde_opt::vec")]
    pub max_depth: Vec<Option<usize>>,
    pub max_features: Vec<MaxFeatures>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            n_samples_per_tree: vec![500, 1000, 2000],
            max_depth: vec![Some(8), Some(12), Some(16), None],
            max_features: vec![MaxFeatures::All],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub params: TreeParams,
    pub cv_loss: f64,
}

fn complexity(p: &TreeParams, n_features: usize) -> (usize, usize, usize) {
    (p.max_depth.unwrap_or(usize::MAX), p.n_samples_per_tree, p.max_features.resolve(n_features))
}

/// Exhaustive k-fold search minimizing mean validation MSE. Ties go to the
/// shallower tree, then fewer samples per tree, then fewer features.
/// Returns the winner and every evaluated configuration in grid order.
pub fn grid_search_hyperparams(
    x: &Matrix,
    y: &[f64],
    base: &TreeParams,
    grid: &HyperGrid,
    k: usize,
    seed: u64,
) -> Result<(TreeParams, Vec<GridResult>)> {
    if grid.n_samples_per_tree.is_empty() || grid.max_depth.is_empty() || grid.max_features.is_empty() {
        return Err(Error::EmptyInput("hyperparameter grid"));
    }
    let folds = kfold_indices(x.rows(), k, seed)?;
    let mut results = Vec::new();
    for &ns in &grid.n_samples_per_tree {
        for &md in &grid.max_depth {
            for &mf in &grid.max_features {
                let params = TreeParams { n_samples_per_tree: ns, max_depth: md, max_features: mf, ..*base };
                let mut total = 0.0;
                for (j, test) in folds.iter().enumerate() {
                    let train: Vec<usize> = (0..x.rows()).filter(|i| test.binary_search(i).is_err()).collect();
                    let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                    let model = fit_bagged(&x.select_rows(&train), &ytr, &params, seed ^ (j as u64 + 1))?;
                    let pred = model.predict(&x.select_rows(test));
                    total += test.iter().zip(&pred).map(|(&i, p)| (p - y[i]).powi(2)).sum::<f64>() / test.len() as f64;
                }
                results.push(GridResult { params, cv_loss: total / k as f64 });
            }
        }
    }
    let nf = x.cols();
    let best = results
        .iter()
        .min_by(|a, b| {
            let tol = 1e-12 * a.cv_loss.abs().max(b.cv_loss.abs());
            if (a.cv_loss - b.cv_loss).abs() <= tol {
                complexity(&a.params, nf).cmp(&complexity(&b.params, nf))
            } else {
                a.cv_loss.total_cmp(&b.cv_loss)
            }
        })
        .expect("non-empty grid")
        .params;
    Ok((best, results))
}
