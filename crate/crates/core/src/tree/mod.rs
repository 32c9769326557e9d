//! Regression trees (CART), bootstrap-aggregated ensembles and a k-fold
//! hyperparameter search.

mod cart;
mod ensemble;
mod search;

pub use cart::{fit_tree, Tree, TreeNode};
pub use ensemble::{bootstrap_indices, fit_bagged, TreeEnsemble, ENSEMBLE_SCHEMA_VERSION};
pub use search::{grid_search_hyperparams, GridResult, HyperGrid};

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    /// Sum of absolute deviations from the node median; leaves hold the median.
    L1,
    /// Sum of squared deviations from the node mean; leaves hold the mean.
    #[default]
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(&self, n_features: usize) -> usize {
        match *self {
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves cannot be split.
    #[serde(with = "crate::serde_opt")]
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub criterion: SplitCriterion,
    pub n_samples_per_tree: usize,
    pub n_trees: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 5,
            criterion: SplitCriterion::L2,
            n_samples_per_tree: 2000,
            n_trees: 100,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> crate::Result<()> {
        if self.min_samples_leaf == 0 || self.n_samples_per_tree == 0 || self.n_trees == 0 {
            return Err(crate::Error::invalid("min_samples_leaf, n_samples_per_tree and n_trees must be positive"));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(crate::Error::invalid("max_features must be positive"));
        }
        Ok(())
    }
}

/// Anything that maps a feature row to a scalar.
pub trait Regressor: Sync {
    fn n_features(&self) -> usize;

    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}
