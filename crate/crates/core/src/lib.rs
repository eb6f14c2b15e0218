//! Offline analysis of microbenchmark suite measurements.
//!
//! Given the raw measurements of one full suite run collected under a
//! multi-level repetition configuration (cloud instances, suite runs,
//! iterations, seconds, ...), this crate computes per-benchmark stability,
//! derives the shortest execution configuration that still yields stable
//! results, quantifies the accuracy loss and time savings of the reduction,
//! and detects performance changes between two versions of a suite.
//!
//! The statistics kernels are generic over the scalar type carrying the
//! measurement values (see [`Scalar`]); the aliases below fix `f64` for
//! ordinary use.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod optimizer;
pub mod regression;
pub mod scalar;
pub mod seed;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use dataset::{
    execution_duration, find_all_smaller_configurations, load_dataset, rmit_schedule,
    ExecutionConfiguration, Level, LevelSchema, MeasurementDataset, MeasurementRecord,
    SchemaConfig, ValueSemantics, WarmupInfo,
};
pub use evaluation::{
    change_rate, cliffs_delta, discard_warmup, evaluate, evaluate_configurations, ChangeRateReport,
    ChangeRateRow, EffectSize, EffectSizeCategory,
};
pub use optimizer::{
    evaluate_candidates, minimum_baseline, optimize, random_baseline, read_result_csv,
    run_strategy, BenchmarkOutcome, CandidateEvaluation, OptimizationResult, OptimizationSettings,
    OptimizationSummary, ParsedResultRow, Strategy, SuiteTotals,
};
pub use regression::{
    detect_changes, score_against_full, ComparisonReport, ConfusionSummary, VersionComparison,
};
pub use stability::{
    bootstrap_percentile_ci, bootstrap_t_ci, cv, mean, median, rmad, sample_std_dev,
    score_interval, stability, BootstrapSettings, CiMethod, ConfidenceInterval, Estimator,
    StabilityMetricId,
};

/// Default scalar type for measurement values.
pub type Value = f64;

/// [`MeasurementDataset`] over the default scalar.
pub type Dataset = MeasurementDataset<Value>;

/// [`ConfidenceInterval`] over the default scalar.
pub type Interval = ConfidenceInterval<Value>;

/// [`OptimizationResult`] over the default scalar.
pub type Optimization = OptimizationResult<Value>;

/// [`ChangeRateReport`] over the default scalar.
pub type Evaluation = ChangeRateReport<Value>;

/// [`ComparisonReport`] over the default scalar.
pub type Comparison = ComparisonReport<Value>;
