//! Accuracy-loss and time-savings evaluation of a reduced-configuration
//! result against the full configuration, static warmup discarding, and
//! Cliff's delta effect sizes.

use std::path::Path;

use serde::Serialize;

use crate::dataset::{execution_duration, ExecutionConfiguration, MeasurementDataset};
use crate::error::{Error, Result};
use crate::optimizer::OptimizationResult;
use crate::scalar::Scalar;
use crate::stability::Estimator;

/// Relative deviation of a reduced-configuration score from the full one:
/// `|r_min - r_full| / r_full`.
pub fn change_rate<F: Scalar>(r_min: F, r_full: F) -> Result<F> {
    if !(r_full > F::zero()) {
        return Err(Error::validation("full-configuration score must be positive"));
    }
    Ok((r_min - r_full).abs() / r_full)
}

/// Per-benchmark change rate entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRateRow<F> {
    pub benchmark: String,
    pub configuration: ExecutionConfiguration,
    pub r_full: F,
    pub r_min: F,
    pub change_rate: F,
}

/// Accuracy and savings of a reduced-configuration result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRateReport<F> {
    pub estimator: Estimator,
    pub rows: Vec<ChangeRateRow<F>>,
    /// Fractions of benchmarks with a change rate strictly below 1%, 3%, 5%.
    pub below_1pct: f64,
    pub below_3pct: f64,
    pub below_5pct: f64,
    pub full_duration_s: f64,
    pub reduced_duration_s: f64,
    pub savings_fraction: f64,
    pub full_warmup_s: f64,
    pub reduced_warmup_s: f64,
    /// Savings over warmup plus measurement time; equals `savings_fraction`
    /// when no warmup phase was discarded.
    pub overall_savings_fraction: f64,
    pub warnings: Vec<String>,
}

impl<F: Scalar> ChangeRateReport<F> {
    /// CSV mirror of the per-benchmark rows.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "benchmark",
                "r_full",
                "r_min",
                "change_rate",
                "below_1pct",
                "below_3pct",
                "below_5pct",
            ])
            .expect("in-memory write");
        for row in &self.rows {
            let c = row.change_rate.to_f64().unwrap_or(f64::NAN);
            writer
                .write_record([
                    row.benchmark.as_str(),
                    &row.r_full.to_string(),
                    &row.r_min.to_string(),
                    &row.change_rate.to_string(),
                    if c < 0.01 { "true" } else { "false" },
                    if c < 0.03 { "true" } else { "false" },
                    if c < 0.05 { "true" } else { "false" },
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String
    where
        F: Serialize,
    {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Computes change rates and duration totals for explicit per-benchmark
/// configurations.
pub fn evaluate_configurations<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    configurations: &[(String, ExecutionConfiguration)],
    estimator: Estimator,
    warnings: Vec<String>,
) -> Result<ChangeRateReport<F>> {
    if configurations.is_empty() {
        return Err(Error::validation("no configurations to evaluate"));
    }
    let e_max = dataset.full_configuration();
    let full_each = execution_duration(&e_max, dataset.schema());
    let full_warmup_each = dataset.warmup_duration(&e_max);

    let mut rows = Vec::with_capacity(configurations.len());
    let mut reduced_duration_s = 0.0;
    let mut reduced_warmup_s = 0.0;
    for (benchmark, configuration) in configurations {
        configuration.validate_against(dataset.schema())?;
        let full_values = dataset.get_measurements(&e_max, benchmark)?;
        let reduced_values = dataset.get_measurements(configuration, benchmark)?;
        let r_full = estimator.apply(&full_values);
        let r_min = estimator.apply(&reduced_values);
        reduced_duration_s += execution_duration(configuration, dataset.schema());
        reduced_warmup_s += dataset.warmup_duration(configuration);
        rows.push(ChangeRateRow {
            benchmark: benchmark.clone(),
            configuration: configuration.clone(),
            r_full,
            r_min,
            change_rate: change_rate(r_min, r_full)?,
        });
    }

    let n = rows.len() as f64;
    let fraction_below = |limit: f64| {
        rows.iter()
            .filter(|r| r.change_rate.to_f64().unwrap_or(f64::NAN) < limit)
            .count() as f64
            / n
    };
    let full_duration_s = full_each * rows.len() as f64;
    let full_warmup_s = full_warmup_each * rows.len() as f64;
    let full_total = full_duration_s + full_warmup_s;
    Ok(ChangeRateReport {
        estimator,
        below_1pct: fraction_below(0.01),
        below_3pct: fraction_below(0.03),
        below_5pct: fraction_below(0.05),
        full_duration_s,
        reduced_duration_s,
        savings_fraction: if full_duration_s > 0.0 {
            (full_duration_s - reduced_duration_s) / full_duration_s
        } else {
            0.0
        },
        full_warmup_s,
        reduced_warmup_s,
        overall_savings_fraction: if full_total > 0.0 {
            (full_total - reduced_duration_s - reduced_warmup_s) / full_total
        } else {
            0.0
        },
        warnings,
        rows,
    })
}

/// Evaluates an optimization result. The estimator defaults to the one
/// paired with the result's metric; passing the other one is allowed but
/// recorded as a warning.
pub fn evaluate<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    result: &OptimizationResult<F>,
    estimator: Option<Estimator>,
) -> Result<ChangeRateReport<F>> {
    let paired = result.metric.estimator();
    let chosen = estimator.unwrap_or(paired);
    let mut warnings = Vec::new();
    if chosen != paired {
        warnings.push(format!(
            "estimator {} does not match the {} estimator paired with metric {}",
            chosen.name(),
            paired.name(),
            result.metric.name()
        ));
    }
    let configurations: Vec<(String, ExecutionConfiguration)> = result
        .rows
        .iter()
        .map(|r| (r.benchmark.clone(), r.configuration.clone()))
        .collect();
    evaluate_configurations(dataset, &configurations, chosen, warnings)
}

/// Removes a static warmup phase from the named level; see
/// [`MeasurementDataset::discard_warmup`].
pub fn discard_warmup<F: Scalar>(
    dataset: &MeasurementDataset<F>,
    level_name: &str,
    warmup_count: usize,
) -> Result<MeasurementDataset<F>> {
    dataset.discard_warmup(level_name, warmup_count)
}

/// Magnitude category of a Cliff's delta value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectSizeCategory {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectSizeCategory {
    pub fn from_delta(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            EffectSizeCategory::Negligible
        } else if d < 0.33 {
            EffectSizeCategory::Small
        } else if d < 0.474 {
            EffectSizeCategory::Medium
        } else {
            EffectSizeCategory::Large
        }
    }
}

/// Cliff's delta with its magnitude category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectSize {
    pub delta: f64,
    pub category: EffectSizeCategory,
}

/// Cliff's delta between two groups:
/// `(#{x_i > y_j} - #{x_i < y_j}) / (|x| * |y|)`.
pub fn cliffs_delta<F: Scalar>(x: &[F], y: &[F]) -> Result<EffectSize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::validation("both groups must be non-empty"));
    }
    let mut greater = 0i64;
    let mut less = 0i64;
    for &a in x {
        for &b in y {
            if a > b {
                greater += 1;
            } else if a < b {
                less += 1;
            }
        }
    }
    let delta = (greater - less) as f64 / (x.len() * y.len()) as f64;
    Ok(EffectSize {
        delta,
        category: EffectSizeCategory::from_delta(delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Level, LevelSchema, MeasurementRecord, ValueSemantics};
    use crate::optimizer::{optimize, OptimizationSettings};
    use crate::stability::StabilityMetricId;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid_dataset(
        counts: &[usize],
        value: impl Fn(&[usize]) -> f64,
    ) -> MeasurementDataset<f64> {
        let levels: Vec<Level> = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| Level {
                name: format!("l{k}"),
                count: c,
            })
            .collect();
        let schema = LevelSchema::new(levels, 1.0, Vec::new()).unwrap();
        let mut records = Vec::new();
        let mut idx = vec![1usize; counts.len()];
        loop {
            records.push(MeasurementRecord {
                benchmark: "b".to_string(),
                indices: idx.clone(),
                value: value(&idx),
            });
            let mut done = true;
            for k in (0..idx.len()).rev() {
                if idx[k] < counts[k] {
                    idx[k] += 1;
                    idx[k + 1..].iter_mut().for_each(|v| *v = 1);
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
        MeasurementDataset::from_records(schema, "ns/op", ValueSemantics::LowerIsBetter, records)
            .unwrap()
    }

    #[test]
    fn change_rate_identities() {
        assert_eq!(change_rate(100.0, 100.0).unwrap(), 0.0);
        assert_relative_eq!(change_rate(103.0, 100.0).unwrap(), 0.03, epsilon = 1e-12);
        assert_relative_eq!(change_rate(97.0, 100.0).unwrap(), 0.03, epsilon = 1e-12);
        assert!(change_rate(1.0, 0.0).is_err());
    }

    #[test]
    fn identity_result_has_zero_change_and_zero_savings() {
        let ds = grid_dataset(&[2, 3], |idx| (idx[0] * 10 + idx[1]) as f64);
        let full = ds.full_configuration();
        let configs = vec![("b".to_string(), full)];
        let report = evaluate_configurations(&ds, &configs, Estimator::Mean, Vec::new()).unwrap();
        assert_eq!(report.rows[0].change_rate, 0.0);
        assert_eq!(report.savings_fraction, 0.0);
        assert_eq!(report.below_1pct, 1.0);
    }

    #[test]
    fn constant_benchmark_any_reduction_is_exact() {
        let ds = grid_dataset(&[2, 3], |_| 5.0);
        let configs = vec![(
            "b".to_string(),
            ExecutionConfiguration::new(vec![1, 3]).unwrap(),
        )];
        let report = evaluate_configurations(&ds, &configs, Estimator::Median, Vec::new()).unwrap();
        assert_eq!(report.rows[0].change_rate, 0.0);
        assert!(report.savings_fraction > 0.0);
    }

    #[test]
    fn drifting_suite_runs_give_closed_form_change_rate() {
        // Values rise 1% per suite run and are constant within a run.
        let ds = grid_dataset(&[3, 4], |idx| 100.0 * 1.01f64.powi(idx[0] as i32 - 1));
        let configs = vec![(
            "b".to_string(),
            ExecutionConfiguration::new(vec![1, 4]).unwrap(),
        )];
        let report = evaluate_configurations(&ds, &configs, Estimator::Mean, Vec::new()).unwrap();
        let r_full: f64 = 100.0 * (1.0 + 1.01 + 1.01 * 1.01) / 3.0;
        let expected = (100.0 - r_full).abs() / r_full;
        assert_relative_eq!(report.rows[0].change_rate, expected, epsilon = 1e-12);
        assert_relative_eq!(report.rows[0].r_full, r_full, epsilon = 1e-12);
        assert_eq!(report.rows[0].r_min, 100.0);
    }

    #[test]
    fn threshold_fractions_are_monotone() {
        // One benchmark per dataset keeps this simple: aggregate over a
        // synthetic multi-benchmark dataset instead.
        let counts = [2usize, 3];
        let levels: Vec<Level> = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| Level {
                name: format!("l{k}"),
                count: c,
            })
            .collect();
        let schema = LevelSchema::new(levels, 1.0, Vec::new()).unwrap();
        let mut records = Vec::new();
        // Benchmarks with change rates around 0%, 2% and 4% when reducing
        // to the first suite run.
        for (b, drift) in [("a", 1.0f64), ("b", 1.031), ("c", 1.062)] {
            for i in 1..=2usize {
                for j in 1..=3usize {
                    records.push(MeasurementRecord {
                        benchmark: b.to_string(),
                        indices: vec![i, j],
                        value: 100.0 * drift.powi(i as i32 - 1),
                    });
                }
            }
        }
        let ds: MeasurementDataset<f64> =
            MeasurementDataset::from_records(schema, "ns/op", ValueSemantics::LowerIsBetter, records)
                .unwrap();
        let reduced = ExecutionConfiguration::new(vec![1, 3]).unwrap();
        let configs: Vec<(String, ExecutionConfiguration)> = ["a", "b", "c"]
            .iter()
            .map(|b| (b.to_string(), reduced.clone()))
            .collect();
        let report = evaluate_configurations(&ds, &configs, Estimator::Mean, Vec::new()).unwrap();
        assert!(report.below_1pct <= report.below_3pct);
        assert!(report.below_3pct <= report.below_5pct);
        assert_relative_eq!(report.below_1pct, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(report.below_3pct, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(report.below_5pct, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn evaluate_warns_on_estimator_mismatch() {
        let ds = grid_dataset(&[2, 3], |idx| 100.0 + (idx[0] + idx[1]) as f64 * 0.001);
        let mut settings = OptimizationSettings::new(StabilityMetricId::Rmad);
        settings.bootstrap.resamples = 100;
        let result = optimize(&ds, &settings).unwrap();
        let report = evaluate(&ds, &result, None).unwrap();
        assert!(report.warnings.is_empty());
        assert_eq!(report.estimator, Estimator::Median);
        let report = evaluate(&ds, &result, Some(Estimator::Mean)).unwrap();
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn cliffs_delta_examples() {
        let same = cliffs_delta(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(same.delta, 0.0);
        assert_eq!(same.category, EffectSizeCategory::Negligible);

        let dominant = cliffs_delta(&[10.0, 11.0], &[1.0, 2.0]).unwrap();
        assert_eq!(dominant.delta, 1.0);
        assert_eq!(dominant.category, EffectSizeCategory::Large);

        // Pairs: (1,2)<, (1,3)<, (2,2) tie, (2,3)< -> (0 - 3)/4
        let mixed = cliffs_delta(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(mixed.delta, -0.75);
        assert_eq!(mixed.category, EffectSizeCategory::Large);

        assert!(cliffs_delta::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn effect_size_category_boundaries() {
        assert_eq!(
            EffectSizeCategory::from_delta(0.1469),
            EffectSizeCategory::Negligible
        );
        assert_eq!(EffectSizeCategory::from_delta(0.147), EffectSizeCategory::Small);
        assert_eq!(EffectSizeCategory::from_delta(0.33), EffectSizeCategory::Medium);
        assert_eq!(EffectSizeCategory::from_delta(0.474), EffectSizeCategory::Large);
        assert_eq!(
            EffectSizeCategory::from_delta(-0.474),
            EffectSizeCategory::Large
        );
    }

    proptest! {
        /// Eq. form is scale invariant: c(k*a, k*b) = c(a, b).
        #[test]
        fn change_rate_scale_invariance(a in 0.5f64..500.0, b in 0.5f64..500.0, k in 0.01f64..100.0) {
            let base = change_rate(a, b).unwrap();
            let scaled = change_rate(k * a, k * b).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
        }

        /// Cliff's delta is antisymmetric and bounded.
        #[test]
        fn cliffs_delta_antisymmetry(
            x in proptest::collection::vec(0.0f64..100.0, 1..12),
            y in proptest::collection::vec(0.0f64..100.0, 1..12),
        ) {
            let xy = cliffs_delta(&x, &y).unwrap();
            let yx = cliffs_delta(&y, &x).unwrap();
            prop_assert_eq!(xy.delta, -yx.delta);
            prop_assert!(xy.delta.abs() <= 1.0);
        }
    }
}
