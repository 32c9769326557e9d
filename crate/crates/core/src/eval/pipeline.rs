//! End-to-end training and prediction for both regressors.

use serde::{Deserialize, Serialize};

use crate::cnn::{train, CnnArch, CnnModel, EpochRecord, TrainConfig};
use crate::data::{split_random, Dataset};
use crate::error::{Error, Result, StageExt};
use crate::features::{
    build_feature_matrix, grid_search_poly_order, recursive_feature_elimination, FeatureMatrix, OnsetConfig,
    OrderSearch, RfeConfig, RfeTrace, WindowSpec,
};
use crate::tree::{fit_bagged, grid_search_hyperparams, GridResult, HyperGrid, Regressor, TreeEnsemble, TreeParams};

pub const DT_MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtPipelineConfig {
    pub windows: WindowSpec,
    pub onset: OnsetConfig,
    pub tree: TreeParams,
    /// per-window order search; skipped when false
    pub search_orders: bool,
    pub order_range: Vec<usize>,
    /// share of the training rows used to score order candidates
    pub order_val_fraction: f64,
    /// bagging parameters used while scoring order candidates
    pub order_tree: TreeParams,
    /// hyperparameter grid; skipped when false
    pub search_hyperparams: bool,
    pub grid: HyperGrid,
    pub cv_folds: usize,
    pub rfe: bool,
    pub rfe_config: RfeConfig,
    pub seed: u64,
}

impl Default for DtPipelineConfig {
    fn default() -> Self {
        Self {
            windows: WindowSpec::default(),
            onset: OnsetConfig::default(),
            tree: TreeParams::default(),
            search_orders: true,
            order_range: (0..=20).collect(),
            order_val_fraction: 0.2,
            order_tree: TreeParams { n_trees: 50, ..TreeParams::default() },
            search_hyperparams: true,
            grid: HyperGrid::default(),
            cv_folds: 5,
            rfe: true,
            rfe_config: RfeConfig::default(),
            seed: 0,
        }
    }
}

/// Window layout, onset settings and the bagged trees over the selected
/// feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtModel {
    pub schema_version: u32,
    pub windows: WindowSpec,
    pub onset: OnsetConfig,
    pub ensemble: TreeEnsemble,
}

impl DtModel {
    pub fn features(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let mut fm = build_feature_matrix(ds, &self.windows, &self.onset)?;
        fm.set_mask(self.ensemble.mask.clone())?;
        Ok(fm)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.is_empty() {
            return Ok(Vec::new());
        }
        let fm = self.features(ds).stage("features")?;
        Ok(self.ensemble.predict(&fm.selected()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: DtModel = serde_json::from_str(s)?;
        if m.schema_version != DT_MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "tree model schema {} (expected {DT_MODEL_SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        if m.ensemble.mask.len() != m.windows.n_features() {
            return Err(Error::Schema("feature mask does not match the window layout".into()));
        }
        Ok(m)
    }
}

/// What the tree pipeline searched and chose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtTrainInfo {
    pub orders: Vec<usize>,
    /// `(window, order, validation loss)`
    pub order_history: Vec<(usize, usize, f64)>,
    pub grid: Vec<GridResult>,
    pub rfe: Option<RfeTrace>,
    pub selected_features: Vec<String>,
}

/// Features, order search, hyperparameter grid, RFE and final bagging.
pub fn fit_dt_pipeline(train_set: &Dataset, cfg: &DtPipelineConfig) -> Result<(DtModel, DtTrainInfo)> {
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut windows = cfg.windows.clone();
    let mut order_history = Vec::new();
    if cfg.search_orders {
        let (inner_tr, inner_va) = split_random(train_set, cfg.order_val_fraction, cfg.seed ^ 0x0D)
            .stage("order-search")?;
        let search = OrderSearch { order_range: cfg.order_range.clone(), tree_params: cfg.order_tree, seed: cfg.seed };
        let (orders, hist) =
            grid_search_poly_order(&inner_tr, &inner_va, &windows, &cfg.onset, &search).stage("order-search")?;
        windows.orders = orders;
        order_history = hist;
    }
    let fm = build_feature_matrix(train_set, &windows, &cfg.onset).stage("features")?;
    let y = train_set.g_values();
    let mut params = cfg.tree;
    let mut grid = Vec::new();
    if cfg.search_hyperparams {
        let (best, table) = grid_search_hyperparams(&fm.values, &y, &cfg.tree, &cfg.grid, cfg.cv_folds, cfg.seed)
            .stage("grid-search")?;
        params = best;
        grid = table;
    }
    let mut mask = vec![true; fm.n_cols()];
    let mut rfe = None;
    if cfg.rfe {
        let rc = RfeConfig { tree_params: params, seed: cfg.seed, ..cfg.rfe_config.clone() };
        let trace = recursive_feature_elimination(&fm.values, &y, &rc).stage("rfe")?;
        mask = trace.mask.clone();
        rfe = Some(trace);
    }
    let mut fm = fm;
    fm.set_mask(mask.clone())?;
    let mut ensemble = fit_bagged(&fm.selected(), &y, &params, cfg.seed).stage("bagging")?;
    ensemble.feature_names = fm.selected_names();
    ensemble.mask = mask;
    ensemble.data_hash = train_set.content_hash();
    let info = DtTrainInfo {
        orders: windows.orders.clone(),
        order_history,
        grid,
        rfe,
        selected_features: ensemble.feature_names.clone(),
    };
    let model = DtModel { schema_version: DT_MODEL_SCHEMA_VERSION, windows, onset: cfg.onset, ensemble };
    Ok((model, info))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnPipelineConfig {
    pub arch: CnnArch,
    pub train: TrainConfig,
    /// seed of the weight initialization
    pub init_seed: u64,
    /// start the output bias at the mean training target
    pub init_output_bias: bool,
}

impl Default for CnnPipelineConfig {
    fn default() -> Self {
        Self { arch: CnnArch::default(), train: TrainConfig::default(), init_seed: 0, init_output_bias: true }
    }
}

/// Trains a fresh network and returns its best-validation snapshot, rounded
/// to the precision of the weight file, plus the loss history.
pub fn fit_cnn_pipeline(train_set: &Dataset, cfg: &CnnPipelineConfig) -> Result<(CnnModel, Vec<EpochRecord>)> {
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let arch = CnnArch { input_len: train_set.time_base().n_t, ..cfg.arch.clone() };
    let mut model = CnnModel::new(arch, cfg.init_seed).stage("cnn-init")?;
    if cfg.init_output_bias {
        let g = train_set.g_values();
        model.set_output_bias(g.iter().sum::<f64>() / g.len() as f64);
    }
    let out = train(model, train_set, &cfg.train).stage("cnn-train")?;
    let mut best = out.best;
    best.round_to_f32();
    Ok((best, out.history))
}
