//! Metrics, pipelines and the generalization scenarios.

mod metrics;
mod pipeline;
mod report;
mod scenario;

pub use metrics::{mae, median, median_pct_diff, MetricConfig};
pub use pipeline::{
    fit_cnn_pipeline, fit_dt_pipeline, CnnPipelineConfig, DtModel, DtPipelineConfig, DtTrainInfo,
    DT_MODEL_SCHEMA_VERSION,
};
pub use report::{time_inference, ModelReport, SampleResidual, ScenarioId, ScenarioReport, TimingConfig, TimingStats};
pub use scenario::{run_pipeline_cnn, run_pipeline_dt, run_scenario, scenario_split, ModelKind, ScenarioConfig};
