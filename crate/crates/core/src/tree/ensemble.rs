use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{fit_on_indices, Tree};
use super::{Regressor, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

pub const ENSEMBLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub schema_version: u32,
    pub params: TreeParams,
    pub trees: Vec<Tree>,
    /// names of the columns the trees were trained on
    pub feature_names: Vec<String>,
    /// selection over the full feature layout that yields those columns
    pub mask: Vec<bool>,
    pub seed: u64,
    pub data_hash: String,
}

/// `m` draws with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, m: usize, rng: &mut SplitMix64) -> Vec<usize> {
    (0..m).map(|_| rng.index(n)).collect()
}

/// Bagged CART ensemble. Tree `t` uses substream `t` of `seed` for both its
/// bootstrap draw and any feature subsampling, so the result does not
/// depend on thread scheduling.
pub fn fit_bagged(x: &Matrix, y: &[f64], params: &TreeParams, seed: u64) -> Result<TreeEnsemble> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput("training set"));
    }
    params.validate()?;
    let base = SplitMix64::new(seed);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = base.substream(t as u64);
            let idx = bootstrap_indices(x.rows(), params.n_samples_per_tree, &mut rng);
            fit_on_indices(x, y, &idx, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeEnsemble {
        schema_version: ENSEMBLE_SCHEMA_VERSION,
        params: *params,
        trees,
        feature_names: (0..x.cols()).map(|j| format!("x{j}")).collect(),
        mask: vec![true; x.cols()],
        seed,
        data_hash: String::new(),
    })
}

impl TreeEnsemble {
    pub fn member_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(x)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: TreeEnsemble = serde_json::from_str(s)?;
        if e.schema_version != ENSEMBLE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "tree ensemble schema {} (expected {ENSEMBLE_SCHEMA_VERSION})",
                e.schema_version
            )));
        }
        Ok(e)
    }
}

impl Regressor for TreeEnsemble {
    fn n_features(&self) -> usize {
        self.trees.first().map_or(0, |t| t.n_features)
    }

    /// Mean of the member predictions with Neumaier-compensated summation.
    fn predict_row(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for t in &self.trees {
            let v = t.predict_row(x);
            let s = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - s) + v;
            } else {
                comp += (v - s) + sum;
            }
            sum = s;
        }
        (sum + comp) / self.trees.len() as f64
    }
}
