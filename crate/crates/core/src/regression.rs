//! Performance-change detection between two versions of a suite.
//!
//! A benchmark changed when the bootstrap confidence intervals of its score
//! in the two versions do not overlap; a change is relevant when its
//! magnitude reaches the relevance threshold. A reduced-configuration
//! comparison is scored against the full-configuration one as ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::dataset::{ExecutionConfiguration, MeasurementDataset};
use crate::error::{Error, Result};
use crate::scalar::{from_f64, Scalar};
use crate::stability::{bootstrap_percentile_ci, BootstrapSettings, ConfidenceInterval, Estimator};

/// Per-benchmark comparison of two versions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VersionComparison<F> {
    pub benchmark: String,
    pub score_v1: F,
    pub score_v2: F,
    pub ci_v1: ConfidenceInterval<F>,
    pub ci_v2: ConfidenceInterval<F>,
    /// Confidence intervals are disjoint.
    pub changed: bool,
    /// Changed and at least as large as the relevance threshold.
    pub relevant: bool,
    /// `|score_v2 - score_v1| / score_v1`.
    pub magnitude: F,
}

/// All per-benchmark comparisons plus the benchmarks skipped because they
/// exist in only one version.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<F> {
    pub estimator: Estimator,
    pub relevance: f64,
    pub comparisons: Vec<VersionComparison<F>>,
    pub skipped: Vec<String>,
}

impl<F: Scalar> ComparisonReport<F> {
    pub fn changed_count(&self) -> usize {
        self.comparisons.iter().filter(|c| c.changed).count()
    }

    pub fn relevant_count(&self) -> usize {
        self.comparisons.iter().filter(|c| c.relevant).count()
    }

    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "benchmark",
                "score_v1",
                "score_v2",
                "ci1_lo",
                "ci1_hi",
                "ci2_lo",
                "ci2_hi",
                "changed",
                "relevant",
                "magnitude",
            ])
            .expect("in-memory write");
        for row in &self.comparisons {
            writer
                .write_record([
                    row.benchmark.as_str(),
                    &row.score_v1.to_string(),
                    &row.score_v2.to_string(),
                    &row.ci_v1.lower.to_string(),
                    &row.ci_v1.upper.to_string(),
                    &row.ci_v2.lower.to_string(),
                    &row.ci_v2.upper.to_string(),
                    if row.changed { "true" } else { "false" },
                    if row.relevant { "true" } else { "false" },
                    &row.magnitude.to_string(),
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

/// Detects performance changes between two versions over the configured
/// measurement prefix of each shared benchmark.
///
/// `configs` maps benchmarks to the configuration to use; benchmarks absent
/// from the map fall back to the respective dataset's full configuration, so
/// an empty map yields the full-configuration ground truth. The labels tag
/// the seed derivation per version and travel with their dataset, keeping
/// detection symmetric under argument swaps.
pub fn detect_changes<F: Scalar>(
    v1: &MeasurementDataset<F>,
    label1: &str,
    v2: &MeasurementDataset<F>,
    label2: &str,
    configs: &BTreeMap<String, ExecutionConfiguration>,
    estimator: Estimator,
    settings: &BootstrapSettings,
    relevance: f64,
) -> Result<ComparisonReport<F>> {
    settings.validate()?;
    if !(relevance >= 0.0) {
        return Err(Error::validation("relevance threshold must be >= 0"));
    }
    let set1: BTreeSet<&str> = v1.benchmark_names().collect();
    let set2: BTreeSet<&str> = v2.benchmark_names().collect();
    let shared: Vec<&str> = set1.intersection(&set2).copied().collect();
    if shared.is_empty() {
        return Err(Error::validation(
            "the two versions share no benchmarks",
        ));
    }
    let skipped: Vec<String> = set1
        .symmetric_difference(&set2)
        .map(|s| s.to_string())
        .collect();

    let relevance_limit = from_f64::<F>(relevance);
    let mut comparisons = Vec::with_capacity(shared.len());
    for benchmark in shared {
        let side = |ds: &MeasurementDataset<F>, label: &str| -> Result<(F, ConfidenceInterval<F>)> {
            let configuration = match configs.get(benchmark) {
                Some(c) => {
                    c.validate_against(ds.schema())?;
                    c.clone()
                }
                None => ds.full_configuration(),
            };
            let values = ds.get_measurements(&configuration, benchmark)?;
            let bootstrap = settings.with_derived_seed(&[label.as_bytes(), benchmark.as_bytes()]);
            let ci = bootstrap_percentile_ci(&values, estimator, &bootstrap)?;
            Ok((estimator.apply(&values), ci))
        };
        let (score_v1, ci_v1) = side(v1, label1)?;
        let (score_v2, ci_v2) = side(v2, label2)?;
        let changed = ci_v1.disjoint(&ci_v2);
        let magnitude = (score_v2 - score_v1).abs() / score_v1;
        comparisons.push(VersionComparison {
            benchmark: benchmark.to_string(),
            score_v1,
            score_v2,
            ci_v1,
            ci_v2,
            changed,
            relevant: changed && magnitude >= relevance_limit,
            magnitude,
        });
    }
    Ok(ComparisonReport {
        estimator,
        relevance,
        comparisons,
        skipped,
    })
}

/// Confusion counts of a reduced-configuration comparison against the
/// full-configuration ground truth. Rates with an empty denominator are
/// absent rather than zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionSummary {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fnr: Option<f64>,
}

/// Scores relevant-change detection of `reduced` against `full` over the
/// same benchmark universe.
pub fn score_against_full<F: Scalar>(
    full: &ComparisonReport<F>,
    reduced: &ComparisonReport<F>,
) -> Result<ConfusionSummary> {
    let universe: BTreeMap<&str, bool> = full
        .comparisons
        .iter()
        .map(|c| (c.benchmark.as_str(), c.relevant))
        .collect();
    let reduced_map: BTreeMap<&str, bool> = reduced
        .comparisons
        .iter()
        .map(|c| (c.benchmark.as_str(), c.relevant))
        .collect();
    if universe.keys().ne(reduced_map.keys()) {
        return Err(Error::validation(
            "full and reduced comparisons cover different benchmarks",
        ));
    }

    let mut summary = ConfusionSummary {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
        fpr: None,
        fnr: None,
    };
    for (benchmark, &truth) in &universe {
        let predicted = reduced_map[benchmark];
        match (truth, predicted) {
            (true, true) => summary.true_positives += 1,
            (true, false) => summary.false_negatives += 1,
            (false, true) => summary.false_positives += 1,
            (false, false) => summary.true_negatives += 1,
        }
    }
    let fp_tn = summary.false_positives + summary.true_negatives;
    if fp_tn > 0 {
        summary.fpr = Some(summary.false_positives as f64 / fp_tn as f64);
    }
    let fn_tp = summary.false_negatives + summary.true_positives;
    if fn_tp > 0 {
        summary.fnr = Some(summary.false_negatives as f64 / fn_tp as f64);
    }
    Ok(summary)
}
