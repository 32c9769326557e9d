//! Shared fixtures for the criterion benches.

use leafwet::cnn::{CnnArch, CnnModel};
use leafwet::sim::{generate_dataset, SimConfig};
use leafwet::tree::{fit_bagged, TreeEnsemble, TreeParams};
use leafwet::features::{build_feature_matrix, OnsetConfig, WindowSpec};
use leafwet::Dataset;

/// Two short TopSide series on the standard 760-sample grid.
pub fn small_dataset() -> Dataset {
    let cfg = SimConfig { n_series: 2, acquisitions_per_series: 40.0, acquisitions_spread: 0.0, ..SimConfig::desk() };
    generate_dataset(&cfg).expect("fixture config is valid")
}

/// Default-size ensemble on the fixture's default feature layout.
pub fn fitted_ensemble(ds: &Dataset) -> TreeEnsemble {
    let fm = build_feature_matrix(ds, &WindowSpec::default(), &OnsetConfig::default()).expect("features");
    fit_bagged(&fm.values, &ds.g_values(), &TreeParams::default(), 0).expect("fit")
}

/// Untrained network with the default architecture.
pub fn default_cnn() -> CnnModel {
    CnnModel::new(CnnArch::default(), 0).expect("default architecture")
}
