use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricConfig;
use super::pipeline::{fit_cnn_pipeline, fit_dt_pipeline, CnnPipelineConfig, DtModel, DtPipelineConfig, DtTrainInfo};
use super::report::{time_inference, ModelReport, ScenarioId, ScenarioReport, TimingConfig};
use crate::cnn::{CnnModel, EpochRecord};
use crate::data::{split_by_series, split_random, Dataset};
use crate::error::{Error, Result, StageExt};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dt,
    Cnn,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Dt => "dt",
            ModelKind::Cnn => "cnn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub test_fraction: f64,
    /// number of series held out in Case I
    pub held_out_series: usize,
    pub split_seed: u64,
    pub models: Vec<ModelKind>,
    pub metric: MetricConfig,
    pub timing: TimingConfig,
    pub dt: DtPipelineConfig,
    pub cnn: CnnPipelineConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.15,
            held_out_series: 2,
            split_seed: 0,
            models: vec![ModelKind::Dt, ModelKind::Cnn],
            metric: MetricConfig::default(),
            timing: TimingConfig::default(),
            dt: DtPipelineConfig::default(),
            cnn: CnnPipelineConfig::default(),
        }
    }
}

pub fn run_pipeline_dt(
    train: &Dataset,
    test: &Dataset,
    cfg: &DtPipelineConfig,
    metric: &MetricConfig,
    timing: &TimingConfig,
) -> Result<(ModelReport, DtModel, DtTrainInfo)> {
    let (model, info) = fit_dt_pipeline(train, cfg)?;
    let g_p = model.predict_dataset(test).stage("inference")?;
    let mut report = ModelReport::new("dt", train, test, &g_p, metric)?;
    report.timing = time_inference(test.len(), timing, |i| {
        model.predict_dataset(&test.subset(&[i])).map(|v| v[0])
    })?;
    Ok((report, model, info))
}

pub fn run_pipeline_cnn(
    train: &Dataset,
    test: &Dataset,
    cfg: &CnnPipelineConfig,
    metric: &MetricConfig,
    timing: &TimingConfig,
) -> Result<(ModelReport, CnnModel, Vec<EpochRecord>)> {
    let (model, history) = fit_cnn_pipeline(train, cfg)?;
    let g_p = model.predict_dataset(test).stage("inference")?;
    let mut report = ModelReport::new("cnn", train, test, &g_p, metric)?;
    report.timing = time_inference(test.len(), timing, |i| {
        let r = &test.records()[i];
        model.predict(&r.trace, r.a)
    })?;
    Ok((report, model, history))
}

/// Train and test sets of a scenario plus the held-out series of Case I.
pub fn scenario_split(
    id: ScenarioId,
    topside: &Dataset,
    bottomside: Option<&Dataset>,
    cfg: &ScenarioConfig,
) -> Result<(Dataset, Dataset, Vec<u32>)> {
    let need_bottom = || bottomside.ok_or_else(|| Error::invalid(format!("scenario {} needs a BottomSide dataset", id.label())));
    match id {
        ScenarioId::Random => {
            let (tr, te) = split_random(topside, cfg.test_fraction, cfg.split_seed)?;
            Ok((tr, te, Vec::new()))
        }
        ScenarioId::CaseI => {
            let mut ids = topside.series_ids();
            if cfg.held_out_series == 0 || cfg.held_out_series >= ids.len() {
                return Err(Error::invalid(format!(
                    "cannot hold out {} of {} series",
                    cfg.held_out_series,
                    ids.len()
                )));
            }
            SplitMix64::new(cfg.split_seed).shuffle(&mut ids);
            let mut held: Vec<u32> = ids[..cfg.held_out_series].to_vec();
            held.sort_unstable();
            let (tr, te) = split_by_series(topside, &held)?;
            Ok((tr, te, held))
        }
        ScenarioId::CaseII => {
            let union = topside.concat(need_bottom()?)?;
            let (tr, te) = split_random(&union, cfg.test_fraction, cfg.split_seed)?;
            Ok((tr, te, Vec::new()))
        }
        ScenarioId::CaseIII => {
            let bottom = need_bottom()?;
            if bottom.is_empty() {
                return Err(Error::EmptyInput("BottomSide dataset"));
            }
            Ok((topside.clone(), bottom.clone(), Vec::new()))
        }
    }
}

/// Runs every configured model on the scenario's split.
pub fn run_scenario(
    id: ScenarioId,
    topside: &Dataset,
    bottomside: Option<&Dataset>,
    cfg: &ScenarioConfig,
) -> Result<ScenarioReport> {
    let (train, test, held) = scenario_split(id, topside, bottomside, cfg).stage("split")?;
    let models = cfg
        .models
        .par_iter()
        .map(|kind| match kind {
            ModelKind::Dt => run_pipeline_dt(&train, &test, &cfg.dt, &cfg.metric, &cfg.timing).map(|r| r.0),
            ModelKind::Cnn => run_pipeline_cnn(&train, &test, &cfg.cnn, &cfg.metric, &cfg.timing).map(|r| r.0),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport { scenario: id, n_train: train.len(), n_test: test.len(), held_out_series: held, models })
}
