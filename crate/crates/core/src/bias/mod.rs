//! Newsvendor decision-bias benchmark.

mod metrics;
mod normal;
mod scenario;

use thiserror::Error;

pub use metrics::{
    evaluate_bias, parse_decision, BiasReport, BucketStats, Decision, DecisionRecord,
};
pub use normal::{inv_norm_cdf, norm_cdf};
pub use scenario::{
    build_curriculum, build_splits, generate_scenario, infer_params_from_percentiles, level_range,
    optimal_q, render_prompt, BiasDataset, CrBucket, CrSet, CurriculumPreset, CurriculumStage,
    DatasetMeta, HiddenDemand, Interval, NewsvendorScenario, Percentiles, Split,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiasError {
    #[error("probability {0} outside the open unit interval")]
    Domain(f64),
    #[error("percentiles must satisfy P25 < P50 < P75")]
    NonMonotonePercentiles,
    #[error("decision refers to unknown scenario {0:?}")]
    UnknownScenario(String),
}
