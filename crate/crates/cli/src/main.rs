//! Command-line front end for offline microbenchmark suite optimization.
//!
//! `optimize` reads a full-configuration measurement CSV and writes the
//! per-benchmark minimal configurations; `evaluate` scores such a result
//! against the full configuration; `compare` detects performance changes
//! between two versions; `rmit-plan` emits interleaved suite-run schedules.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use uoptime_core::{
    detect_changes, evaluate_configurations, load_dataset, read_result_csv, rmit_schedule,
    run_strategy, score_against_full, BootstrapSettings, ConfusionSummary, Dataset, Error,
    Estimator, ExecutionConfiguration, OptimizationSettings, Result, SchemaConfig,
    StabilityMetricId, Strategy,
};

#[derive(Parser)]
#[command(name = "uoptime", version, about, propagate_version = true)]
struct Cli {
    /// Print a machine-readable error JSON to stderr on failure.
    #[arg(long, global = true)]
    error_json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-benchmark minimal execution configurations.
    Optimize(OptimizeArgs),
    /// Quantify accuracy loss and time savings of a result file.
    Evaluate(EvaluateArgs),
    /// Detect performance changes between two suite versions.
    Compare(CompareArgs),
    /// Generate seeded interleaved suite-run schedules.
    RmitPlan(RmitPlanArgs),
}

#[derive(Args)]
struct BootstrapArgs {
    /// Bootstrap confidence level.
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,

    /// Number of bootstrap resamples.
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,

    /// Seed for every randomized step.
    #[arg(long, env = "UOPTIME_SEED", default_value_t = 0)]
    seed: u64,
}

impl BootstrapArgs {
    fn settings(&self) -> BootstrapSettings {
        BootstrapSettings {
            confidence_level: self.confidence,
            resamples: self.resamples,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct WarmupArgs {
    /// Level whose leading repetitions are discarded as warmup.
    #[arg(long, requires = "warmup_count")]
    warmup_level: Option<String>,

    /// Number of leading repetitions to discard at that level.
    #[arg(long, requires = "warmup_level")]
    warmup_count: Option<usize>,
}

impl WarmupArgs {
    fn apply(&self, dataset: Dataset) -> Result<Dataset> {
        match (&self.warmup_level, self.warmup_count) {
            (Some(level), Some(count)) => dataset.discard_warmup(level, count),
            _ => Ok(dataset),
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    /// Schema sidecar JSON (levels, leaf duration, parallel levels, unit).
    #[arg(long)]
    schema: PathBuf,

    /// Measurement CSV of the full suite run.
    #[arg(long)]
    data: PathBuf,

    /// Directory receiving result.csv and summary.json.
    #[arg(long)]
    out_dir: PathBuf,

    /// Stability metric: cv, rmad, rciw1, rciw2 or rciw3.
    #[arg(long)]
    metric: StabilityMetricId,

    /// Stability threshold; candidates at or below it qualify.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,

    /// Smallest total number of data points a candidate may collect.
    #[arg(long, default_value_t = 3)]
    min_repetitions: usize,

    /// Selection strategy: uoptime, minimum or random.
    #[arg(long, default_value = "uoptime")]
    strategy: Strategy,

    #[command(flatten)]
    bootstrap: BootstrapArgs,

    #[command(flatten)]
    warmup: WarmupArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    schema: PathBuf,

    /// Measurement CSV of the full suite run the result was derived from.
    #[arg(long)]
    data: PathBuf,

    /// Result CSV produced by `uoptime optimize`.
    #[arg(long)]
    result: PathBuf,

    /// Directory receiving change_rates.csv and change_rates.json.
    #[arg(long)]
    out_dir: PathBuf,

    /// Score estimator: mean or median. Defaults to the estimator paired
    /// with --metric when that is given.
    #[arg(long)]
    estimator: Option<Estimator>,

    /// Metric the result was optimized with; supplies the default estimator.
    #[arg(long)]
    metric: Option<StabilityMetricId>,

    #[command(flatten)]
    warmup: WarmupArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Schema sidecar JSON shared by both versions.
    #[arg(long)]
    schema: PathBuf,

    /// Measurement CSV of the first version.
    #[arg(long)]
    v1: PathBuf,

    /// Measurement CSV of the second version.
    #[arg(long)]
    v2: PathBuf,

    /// Directory receiving comparison.csv and comparison_summary.json.
    #[arg(long)]
    out_dir: PathBuf,

    /// Result CSV with reduced configurations; when given, the comparison
    /// runs on the reduced prefixes and is scored against the
    /// full-configuration ground truth.
    #[arg(long)]
    configs: Option<PathBuf>,

    /// Score estimator for the confidence intervals.
    #[arg(long, default_value = "median")]
    estimator: Estimator,

    /// Minimum relative change for a detected change to count as relevant.
    #[arg(long, default_value_t = 0.03)]
    relevance: f64,

    #[command(flatten)]
    bootstrap: BootstrapArgs,

    #[command(flatten)]
    warmup: WarmupArgs,
}

#[derive(Args)]
struct RmitPlanArgs {
    /// Comma-separated benchmark ids.
    #[arg(long, value_delimiter = ',')]
    benchmarks: Vec<String>,

    /// Executions of each benchmark within one suite run.
    #[arg(long)]
    iterations: usize,

    /// Number of suite runs.
    #[arg(long)]
    suite_runs: usize,

    /// Seed for the shuffle.
    #[arg(long, env = "UOPTIME_SEED", default_value_t = 0)]
    seed: u64,

    /// Output file (JSON lines, one suite run per line); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Optimize(args) => run_optimize(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Compare(args) => run_compare(args),
        Command::RmitPlan(args) => run_rmit_plan(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let kind = if error.is_io() { "io" } else { "validation" };
            if cli.error_json {
                let payload = serde_json::json!({
                    "error": error.to_string(),
                    "kind": kind,
                });
                eprintln!("{payload}");
            } else {
                eprintln!("error: {error}");
            }
            ExitCode::from(if error.is_io() { 2 } else { 1 })
        }
    }
}

fn load(schema: &Path, data: &Path, warmup: &WarmupArgs) -> Result<(Dataset, SchemaConfig)> {
    let config = SchemaConfig::from_json_file(schema)?;
    let dataset = load_dataset::<f64>(data, &config)?;
    Ok((warmup.apply(dataset)?, config))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

fn run_optimize(args: &OptimizeArgs) -> Result<()> {
    let (dataset, config) = load(&args.schema, &args.data, &args.warmup)?;
    let settings = OptimizationSettings {
        metric: args.metric,
        threshold: args.threshold,
        bootstrap: args.bootstrap.settings(),
        min_repetitions: args.min_repetitions,
    };
    let result = run_strategy(&dataset, &settings, args.strategy)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let result_path = args.out_dir.join("result.csv");
    result.write_csv(&result_path)?;
    let summary_path = args.out_dir.join("summary.json");
    write_json(
        &summary_path,
        &result.summary(&settings, args.strategy, &config.unit),
    )?;

    println!(
        "optimize ({}): {} benchmarks, {} not reduced, {:.2} of {:.2} s saved ({:.2}%)",
        args.strategy.name(),
        result.totals.benchmarks,
        result.totals.not_reduced,
        result.totals.saved_s,
        result.totals.full_duration_s,
        result.totals.saved_fraction * 100.0
    );
    println!("wrote {} and {}", result_path.display(), summary_path.display());
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (dataset, _) = load(&args.schema, &args.data, &args.warmup)?;
    let rows = read_result_csv(&args.result)?;
    let configurations: Vec<(String, ExecutionConfiguration)> = rows
        .into_iter()
        .map(|r| (r.benchmark, r.configuration))
        .collect();

    let paired = args.metric.map(|m| m.estimator());
    let estimator = match (args.estimator, paired) {
        (Some(e), _) => e,
        (None, Some(e)) => e,
        (None, None) => {
            return Err(Error::Validation(
                "specify --estimator or --metric to choose the score estimator".to_string(),
            ))
        }
    };
    let mut warnings = Vec::new();
    if let (Some(explicit), Some(paired)) = (args.estimator, paired) {
        if explicit != paired {
            warnings.push(format!(
                "estimator {} does not match the {} estimator paired with metric {}",
                explicit.name(),
                paired.name(),
                args.metric.expect("paired implies metric").name()
            ));
        }
    }

    let report = evaluate_configurations(&dataset, &configurations, estimator, warnings)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("change_rates.csv");
    report.write_csv(&csv_path)?;
    let json_path = args.out_dir.join("change_rates.json");
    write_json(&json_path, &report)?;

    println!(
        "evaluate ({}): {:.1}% < 1%, {:.1}% < 3%, {:.1}% < 5%; measurement savings {:.2}%",
        report.estimator.name(),
        report.below_1pct * 100.0,
        report.below_3pct * 100.0,
        report.below_5pct * 100.0,
        report.savings_fraction * 100.0
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

/// Summary JSON of one compare run.
#[derive(Serialize)]
struct CompareSummary {
    estimator: Estimator,
    relevance: f64,
    confidence_level: f64,
    resamples: usize,
    seed: u64,
    benchmarks: usize,
    changed: usize,
    relevant: usize,
    skipped: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<ConfusionSummary>,
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let config = SchemaConfig::from_json_file(&args.schema)?;
    let v1 = args.warmup.apply(load_dataset::<f64>(&args.v1, &config)?)?;
    let v2 = args.warmup.apply(load_dataset::<f64>(&args.v2, &config)?)?;
    let label1 = args.v1.display().to_string();
    let label2 = args.v2.display().to_string();
    let settings = args.bootstrap.settings();

    let configs: BTreeMap<String, ExecutionConfiguration> = match &args.configs {
        Some(path) => read_result_csv(path)?
            .into_iter()
            .map(|r| (r.benchmark, r.configuration))
            .collect(),
        None => BTreeMap::new(),
    };

    let report = detect_changes(
        &v1,
        &label1,
        &v2,
        &label2,
        &configs,
        args.estimator,
        &settings,
        args.relevance,
    )?;

    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("comparison.csv");
    report.write_csv(&csv_path)?;

    // With reduced configurations, the full configuration supplies the
    // ground truth for the confusion summary.
    let confusion = if args.configs.is_some() {
        let full = detect_changes(
            &v1,
            &label1,
            &v2,
            &label2,
            &BTreeMap::new(),
            args.estimator,
            &settings,
            args.relevance,
        )?;
        full.write_csv(args.out_dir.join("comparison_full.csv"))?;
        Some(score_against_full(&full, &report)?)
    } else {
        None
    };

    let summary = CompareSummary {
        estimator: args.estimator,
        relevance: args.relevance,
        confidence_level: settings.confidence_level,
        resamples: settings.resamples,
        seed: settings.seed,
        benchmarks: report.comparisons.len(),
        changed: report.changed_count(),
        relevant: report.relevant_count(),
        skipped: report.skipped.clone(),
        confusion,
    };
    let summary_path = args.out_dir.join("comparison_summary.json");
    write_json(&summary_path, &summary)?;

    println!(
        "compare: {} shared benchmarks, {} changed, {} relevant, {} skipped",
        summary.benchmarks,
        summary.changed,
        summary.relevant,
        summary.skipped.len()
    );
    if let Some(c) = &summary.confusion {
        println!(
            "confusion vs full: TP {} FP {} TN {} FN {} (FPR {}, FNR {})",
            c.true_positives,
            c.false_positives,
            c.true_negatives,
            c.false_negatives,
            c.fpr.map_or("n/a".to_string(), |v| format!("{:.2}%", v * 100.0)),
            c.fnr.map_or("n/a".to_string(), |v| format!("{:.2}%", v * 100.0)),
        );
    }
    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    Ok(())
}

fn run_rmit_plan(args: &RmitPlanArgs) -> Result<()> {
    let benchmarks: Vec<String> = args
        .benchmarks
        .iter()
        .filter(|b| !b.is_empty())
        .cloned()
        .collect();
    let schedule = rmit_schedule(&benchmarks, args.iterations, args.suite_runs, args.seed)?;

    let mut body = String::new();
    for run in &schedule {
        body.push_str(&serde_json::to_string(run).expect("schedule serializes"));
        body.push('\n');
    }
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, &body)?;
            println!(
                "wrote {} suite runs of {} entries to {}",
                schedule.len(),
                schedule[0].len(),
                path.display()
            );
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}
