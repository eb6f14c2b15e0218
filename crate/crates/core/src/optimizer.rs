//! Search for the shortest stable execution configuration per benchmark,
//! plus the minimum and random baseline strategies.
//!
//! For every benchmark, all configurations entry-wise below the full one are
//! simulated by prefix selection; candidates whose stability stays at or
//! below the threshold qualify, and the shortest-duration qualifier wins
//! (ties fall back to lower stability, then to the lexicographically
//! smallest tuple). Benchmarks without any stable candidate keep the full
//! configuration and are flagged.

use std::cmp::Ordering;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{
    execution_duration, find_all_smaller_configurations, ExecutionConfiguration,
    MeasurementDataset,
};
use crate::error::{Error, Result};
use crate::scalar::{from_f64, Scalar};
use crate::seed;
use crate::stability::{
    score_interval, stability, BootstrapSettings, ConfidenceInterval, Estimator,
    StabilityMetricId,
};

/// Parameters of the optimization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationSettings {
    pub metric: StabilityMetricId,
    /// Stability threshold `ts`; a candidate qualifies when its stability is
    /// at or below it.
    pub threshold: f64,
    pub bootstrap: BootstrapSettings,
    /// Minimum total number of data points a candidate must collect.
    pub min_repetitions: usize,
}

impl OptimizationSettings {
    pub fn new(metric: StabilityMetricId) -> Self {
        Self {
            metric,
            threshold: 0.01,
            bootstrap: BootstrapSettings::default(),
            min_repetitions: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::validation(
                "stability threshold must lie strictly between 0 and 1",
            ));
        }
        if self.min_repetitions < 2 {
            return Err(Error::validation("min_repetitions must be >= 2"));
        }
        self.bootstrap.validate()
    }
}

/// One simulated configuration of one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEvaluation<F> {
    pub benchmark: String,
    pub configuration: ExecutionConfiguration,
    pub measurements: Vec<F>,
    pub duration_s: f64,
    pub stability: F,
}

/// Strategy selecting the per-benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Shortest stable configuration.
    UOpTime,
    /// Shortest possible configuration, ignoring stability.
    Minimum,
    /// Seeded uniform draw over all eligible configurations.
    Random,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UOpTime => "uoptime",
            Strategy::Minimum => "minimum",
            Strategy::Random => "random",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uoptime" => Ok(Strategy::UOpTime),
            "minimum" => Ok(Strategy::Minimum),
            "random" => Ok(Strategy::Random),
            other => Err(Error::validation(format!("unknown strategy: {other}"))),
        }
    }
}

/// Chosen configuration and statistics for one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkOutcome<F> {
    pub benchmark: String,
    pub configuration: ExecutionConfiguration,
    pub stability: F,
    /// Mean or median of the selected prefix, per the metric's estimator.
    pub score: F,
    pub interval: ConfidenceInterval<F>,
    pub duration_s: f64,
    pub saved_s: f64,
    /// False when no candidate passed the stability filter and the full
    /// configuration was kept.
    pub reduced: bool,
}

/// Suite-level duration accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteTotals {
    pub benchmarks: usize,
    pub not_reduced: usize,
    pub full_duration_s: f64,
    pub reduced_duration_s: f64,
    pub saved_s: f64,
    pub saved_fraction: f64,
    /// Warmup seconds under the full and the chosen configurations; zero
    /// when the dataset has no discarded warmup phase.
    pub full_warmup_s: f64,
    pub reduced_warmup_s: f64,
}

/// The set of per-benchmark minimal configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<F> {
    pub metric: StabilityMetricId,
    pub estimator: Estimator,
    pub rows: Vec<BenchmarkOutcome<F>>,
    pub totals: SuiteTotals,
}

/// Settings echo plus totals, written as the JSON summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationSummary {
    pub strategy: Strategy,
    pub metric: StabilityMetricId,
    pub estimator: Estimator,
    pub threshold: f64,
    pub confidence_level: f64,
    pub resamples: usize,
    pub seed: u64,
    pub min_repetitions: usize,
    pub unit: String,
    pub totals: SuiteTotals,
}

impl<F: Scalar> OptimizationResult<F> {
    pub fn summary(
        &self,
        settings: &OptimizationSettings,
        strategy: Strategy,
        unit: &str,
    ) -> OptimizationSummary {
        OptimizationSummary {
            strategy,
            metric: self.metric,
            estimator: self.estimator,
            threshold: settings.threshold,
            confidence_level: settings.bootstrap.confidence_level,
            resamples: settings.bootstrap.resamples,
            seed: settings.bootstrap.seed,
            min_repetitions: settings.min_repetitions,
            unit: unit.to_string(),
            totals: self.totals,
        }
    }

    /// Renders the per-benchmark result CSV.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "benchmark",
                "config",
                "stability",
                "score",
                "ci_lower",
                "ci_upper",
                "duration_s",
                "saved_s",
                "flag",
            ])
            .expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record([
                    row.benchmark.as_str(),
                    &row.configuration.label(),
                    &row.stability.to_string(),
                    &row.score.to_string(),
                    &row.interval.lower.to_string(),
                    &row.interval.upper.to_string(),
                    &row.duration_s.to_string(),
                    &row.saved_s.to_string(),
                    if row.reduced { "ok" } else { "not_reduced" },
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// One parsed row of a result CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResultRow {
    pub benchmark: String,
    pub configuration: ExecutionConfiguration,
    pub stability: f64,
    pub score: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub duration_s: f64,
    pub saved_s: f64,
    pub reduced: bool,
}

/// Reads a result CSV written by [`OptimizationResult::write_csv`].
pub fn read_result_csv(path: impl AsRef<Path>) -> Result<Vec<ParsedResultRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 9 {
            return Err(Error::Parse {
                line,
                message: format!("expected 9 fields, got {}", record.len()),
            });
        }
        let num = |k: usize, name: &str| -> Result<f64> {
            record[k].trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {name}: {:?}", &record[k]),
            })
        };
        rows.push(ParsedResultRow {
            benchmark: record[0].to_string(),
            configuration: record[1].parse()?,
            stability: num(2, "stability")?,
            score: num(3, "score")?,
            ci_lower: num(4, "ci_lower")?,
            ci_upper: num(5, "ci_upper")?,
            duration_s: num(6, "duration_s")?,
            saved_s: num(7, "saved_s")?,
            reduced: match &record[8] {
                "ok" => true,
                "not_reduced" => false,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("invalid flag: {other:?}"),
                    })
                }
            },
        });
    }
    Ok(rows)
}

/// Evaluates every eligible candidate configuration of one benchmark:
/// prefix measurements, execution duration and stability, with the bootstrap
/// seeded per (seed, benchmark, configuration).
pub fn evaluate_candidates<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    benchmark: &str,
    settings: &OptimizationSettings,
) -> Result<Vec<CandidateEvaluation<F>>> {
    settings.validate()?;
    let schema = dataset.schema();
    let e_max = dataset.full_configuration();
    let mut candidates = Vec::new();
    for configuration in find_all_smaller_configurations(&e_max) {
        if configuration.repetitions() < settings.min_repetitions {
            continue;
        }
        let measurements = dataset.get_measurements(&configuration, benchmark)?;
        let bootstrap = settings
            .bootstrap
            .with_derived_seed(&[benchmark.as_bytes(), configuration.label().as_bytes()]);
        let value = stability(&measurements, settings.metric, &bootstrap)?;
        candidates.push(CandidateEvaluation {
            benchmark: benchmark.to_string(),
            configuration: configuration.clone(),
            duration_s: execution_duration(&configuration, schema),
            stability: value,
            measurements,
        });
    }
    Ok(candidates)
}

fn candidate_order<F: Scalar>(a: &CandidateEvaluation<F>, b: &CandidateEvaluation<F>) -> Ordering {
    a.duration_s
        .total_cmp(&b.duration_s)
        .then_with(|| {
            a.stability
                .partial_cmp(&b.stability)
                .expect("stability values are finite")
        })
        .then_with(|| a.configuration.cmp(&b.configuration))
}

fn outcome_from_candidate<F: Scalar>(
    candidate: &CandidateEvaluation<F>,
    settings: &OptimizationSettings,
    full_duration: f64,
    reduced: bool,
) -> Result<BenchmarkOutcome<F>> {
    let bootstrap = settings.bootstrap.with_derived_seed(&[
        candidate.benchmark.as_bytes(),
        candidate.configuration.label().as_bytes(),
    ]);
    let interval = score_interval(&candidate.measurements, settings.metric, &bootstrap)?;
    let estimator = settings.metric.estimator();
    let score = estimator.apply(&candidate.measurements);
    Ok(BenchmarkOutcome {
        benchmark: candidate.benchmark.clone(),
        configuration: candidate.configuration.clone(),
        stability: candidate.stability,
        score,
        interval,
        duration_s: candidate.duration_s,
        saved_s: full_duration - candidate.duration_s,
        reduced,
    })
}

fn assemble<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
    rows: Vec<BenchmarkOutcome<F>>,
) -> OptimizationResult<F> {
    let e_max = dataset.full_configuration();
    let full_each = execution_duration(&e_max, dataset.schema());
    let full_warmup_each = dataset.warmup_duration(&e_max);
    let benchmarks = rows.len();
    let full_duration_s = full_each * benchmarks as f64;
    let reduced_duration_s: f64 = rows.iter().map(|r| r.duration_s).sum();
    let saved_s = full_duration_s - reduced_duration_s;
    let reduced_warmup_s: f64 = rows
        .iter()
        .map(|r| dataset.warmup_duration(&r.configuration))
        .sum();
    OptimizationResult {
        metric: settings.metric,
        estimator: settings.metric.estimator(),
        totals: SuiteTotals {
            benchmarks,
            not_reduced: rows.iter().filter(|r| !r.reduced).count(),
            full_duration_s,
            reduced_duration_s,
            saved_s,
            saved_fraction: if full_duration_s > 0.0 {
                saved_s / full_duration_s
            } else {
                0.0
            },
            full_warmup_s: full_warmup_each * benchmarks as f64,
            reduced_warmup_s,
        },
        rows,
    }
}

fn check_dataset<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
) -> Result<()> {
    settings.validate()?;
    if dataset.benchmark_count() == 0 {
        return Err(Error::validation("dataset contains no benchmarks"));
    }
    let full = dataset.full_configuration();
    if full.repetitions() < settings.min_repetitions {
        return Err(Error::validation(format!(
            "full configuration collects {} data points, below the minimum of {}",
            full.repetitions(),
            settings.min_repetitions
        )));
    }
    Ok(())
}

fn per_benchmark<F, G>(dataset: &MeasurementDataset<F>, build: G) -> Result<Vec<BenchmarkOutcome<F>>>
where
    F: Scalar,
    G: Fn(&str) -> Result<BenchmarkOutcome<F>> + Send + Sync,
{
    // Benchmarks are independent; results match sequential execution because
    // every randomized step is seeded per benchmark.
    dataset
        .benchmark_names()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(build)
        .collect()
}

/// Finds the shortest stable configuration for every benchmark. Benchmarks
/// without any stable candidate keep the full configuration, flagged as not
/// reduced.
pub fn optimize<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
) -> Result<OptimizationResult<F>> {
    check_dataset(dataset, settings)?;
    let e_max = dataset.full_configuration();
    let full_duration = execution_duration(&e_max, dataset.schema());
    let threshold = from_f64::<F>(settings.threshold);

    let rows = per_benchmark(dataset, |benchmark| {
        let candidates = evaluate_candidates(dataset, benchmark, settings)?;
        let stable = candidates
            .iter()
            .filter(|c| c.stability <= threshold)
            .min_by(|a, b| candidate_order(a, b));
        match stable {
            Some(best) => outcome_from_candidate(best, settings, full_duration, true),
            None => {
                let full = candidates
                    .iter()
                    .find(|c| c.configuration == e_max)
                    .expect("full configuration is always eligible");
                outcome_from_candidate(full, settings, full_duration, false)
            }
        }
    })?;
    Ok(assemble(dataset, settings, rows))
}

/// Eligible configurations in selection order (duration-ascending, ties
/// lexicographic), shared by both baselines.
fn eligible_configurations<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
) -> Vec<(ExecutionConfiguration, f64)> {
    let mut eligible: Vec<(ExecutionConfiguration, f64)> =
        find_all_smaller_configurations(&dataset.full_configuration())
            .into_iter()
            .filter(|e| e.repetitions() >= settings.min_repetitions)
            .map(|e| {
                let duration = execution_duration(&e, dataset.schema());
                (e, duration)
            })
            .collect();
    eligible.sort_by(|(ea, da), (eb, db)| da.total_cmp(db).then_with(|| ea.cmp(eb)));
    eligible
}

fn baseline_outcome<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    benchmark: &str,
    configuration: &ExecutionConfiguration,
    duration_s: f64,
    settings: &OptimizationSettings,
    full_duration: f64,
) -> Result<BenchmarkOutcome<F>> {
    let measurements = dataset.get_measurements(configuration, benchmark)?;
    let bootstrap = settings
        .bootstrap
        .with_derived_seed(&[benchmark.as_bytes(), configuration.label().as_bytes()]);
    let candidate = CandidateEvaluation {
        benchmark: benchmark.to_string(),
        configuration: configuration.clone(),
        stability: stability(&measurements, settings.metric, &bootstrap)?,
        duration_s,
        measurements,
    };
    outcome_from_candidate(&candidate, settings, full_duration, true)
}

/// Baseline that always picks the shortest eligible configuration,
/// maximizing time savings with no stability filtering.
pub fn minimum_baseline<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
) -> Result<OptimizationResult<F>> {
    check_dataset(dataset, settings)?;
    let eligible = eligible_configurations(dataset, settings);
    let (configuration, duration_s) = eligible[0].clone();
    let full_duration = execution_duration(&dataset.full_configuration(), dataset.schema());

    let rows = per_benchmark(dataset, |benchmark| {
        baseline_outcome(
            dataset,
            benchmark,
            &configuration,
            duration_s,
            settings,
            full_duration,
        )
    })?;
    Ok(assemble(dataset, settings, rows))
}

fn random_pick(eligible_len: usize, selection_seed: u64, benchmark: &str) -> usize {
    let mut rng = seed::rng_for(selection_seed, &[b"random", benchmark.as_bytes()]);
    rng.random_range(0..eligible_len)
}

/// Baseline that draws, per benchmark, a uniform configuration between the
/// smallest eligible and the full one (both inclusive). Deterministic per
/// seed.
pub fn random_baseline<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
    selection_seed: u64,
) -> Result<OptimizationResult<F>> {
    check_dataset(dataset, settings)?;
    let eligible = eligible_configurations(dataset, settings);
    let full_duration = execution_duration(&dataset.full_configuration(), dataset.schema());

    let rows = per_benchmark(dataset, |benchmark| {
        let (configuration, duration_s) =
            eligible[random_pick(eligible.len(), selection_seed, benchmark)].clone();
        baseline_outcome(
            dataset,
            benchmark,
            &configuration,
            duration_s,
            settings,
            full_duration,
        )
    })?;
    Ok(assemble(dataset, settings, rows))
}

/// Runs the requested strategy; the random baseline draws its selections
/// from the same seed as the bootstrap.
pub fn run_strategy<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    settings: &OptimizationSettings,
    strategy: Strategy,
) -> Result<OptimizationResult<F>> {
    match strategy {
        Strategy::UOpTime => optimize(dataset, settings),
        Strategy::Minimum => minimum_baseline(dataset, settings),
        Strategy::Random => random_baseline(dataset, settings, settings.bootstrap.seed),
    }
}
