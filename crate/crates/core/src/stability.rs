//! Stability metrics and the bootstrap machinery behind them.
//!
//! All five metrics are relative variability measures: a spread estimate
//! divided by a location estimate, dimensionless and scale-free. Lower means
//! more stable.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_f64, from_usize, Scalar};
use crate::seed;

/// Identifies one of the supported stability metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMetricId {
    /// Standard deviation over the mean.
    Cv,
    /// Median absolute deviation over the median.
    Rmad,
    /// Percentile-bootstrap CI width of the mean, over the mean.
    Rciw1,
    /// Bootstrap-t CI width of the mean, over the mean.
    Rciw2,
    /// Percentile-bootstrap CI width of the median, over the median.
    Rciw3,
}

impl StabilityMetricId {
    pub const ALL: [StabilityMetricId; 5] = [
        StabilityMetricId::Cv,
        StabilityMetricId::Rmad,
        StabilityMetricId::Rciw1,
        StabilityMetricId::Rciw2,
        StabilityMetricId::Rciw3,
    ];

    /// The location estimator the metric normalizes by; performance scores
    /// are reported with the same estimator.
    pub fn estimator(&self) -> Estimator {
        match self {
            StabilityMetricId::Cv | StabilityMetricId::Rciw1 | StabilityMetricId::Rciw2 => {
                Estimator::Mean
            }
            StabilityMetricId::Rmad | StabilityMetricId::Rciw3 => Estimator::Median,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StabilityMetricId::Cv => "cv",
            StabilityMetricId::Rmad => "rmad",
            StabilityMetricId::Rciw1 => "rciw1",
            StabilityMetricId::Rciw2 => "rciw2",
            StabilityMetricId::Rciw3 => "rciw3",
        }
    }
}

impl std::str::FromStr for StabilityMetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cv" => Ok(StabilityMetricId::Cv),
            "rmad" => Ok(StabilityMetricId::Rmad),
            "rciw1" => Ok(StabilityMetricId::Rciw1),
            "rciw2" => Ok(StabilityMetricId::Rciw2),
            "rciw3" => Ok(StabilityMetricId::Rciw3),
            other => Err(Error::validation(format!("unknown stability metric: {other}"))),
        }
    }
}

/// Location estimator for scores and confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mean,
    Median,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Mean => "mean",
            Estimator::Median => "median",
        }
    }

    /// Point estimate over a sample.
    pub fn apply<F: Scalar>(&self, values: &[F]) -> F {
        match self {
            Estimator::Mean => mean(values),
            Estimator::Median => median(values),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Estimator::Mean),
            "median" => Ok(Estimator::Median),
            other => Err(Error::validation(format!("unknown estimator: {other}"))),
        }
    }
}

/// CI construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Percentile,
    TInterval,
}

/// Bootstrap resampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub confidence_level: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            confidence_level: 0.99,
            resamples: 10_000,
            seed: 0,
        }
    }
}

impl BootstrapSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::validation(
                "confidence level must lie strictly between 0 and 1",
            ));
        }
        if self.resamples < 1 {
            return Err(Error::validation("resamples must be >= 1"));
        }
        Ok(())
    }

    /// Same settings with the seed replaced by a derived sub-seed.
    pub fn with_derived_seed(&self, parts: &[&[u8]]) -> Self {
        Self {
            seed: seed::derive_seed(self.seed, parts),
            ..self.clone()
        }
    }
}

/// Two-sided confidence interval around a location estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval<F> {
    pub lower: F,
    pub upper: F,
    pub estimator: Estimator,
    pub method: CiMethod,
}

impl<F: Scalar> ConfidenceInterval<F> {
    pub fn width(&self) -> F {
        self.upper - self.lower
    }

    /// True when two intervals have no point in common.
    pub fn disjoint(&self, other: &ConfidenceInterval<F>) -> bool {
        self.upper < other.lower || other.upper < self.lower
    }
}

/// Arithmetic mean.
pub fn mean<F: Scalar>(values: &[F]) -> F {
    debug_assert!(!values.is_empty());
    values.iter().copied().sum::<F>() / from_usize(values.len())
}

/// Median; midpoint of the two central order statistics for even lengths.
pub fn median<F: Scalar>(values: &[F]) -> F {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("measurement values are ordered"));
    median_of_sorted(&sorted)
}

fn median_of_sorted<F: Scalar>(sorted: &[F]) -> F {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / from_f64(2.0)
    }
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_std_dev<F: Scalar>(values: &[F]) -> Result<F> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let m = mean(values);
    let sum_sq = values
        .iter()
        .map(|&v| (v - m) * (v - m))
        .fold(F::zero(), |acc, x| acc + x);
    Ok((sum_sq / from_usize(values.len() - 1)).sqrt())
}

/// Coefficient of variation: sample standard deviation over the mean.
pub fn cv<F: Scalar>(values: &[F]) -> Result<F> {
    Ok(sample_std_dev(values)? / mean(values))
}

/// Relative median absolute deviation: median distance from the median,
/// over the median. No consistency scaling constant is applied.
pub fn rmad<F: Scalar>(values: &[F]) -> Result<F> {
    if values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let med = median(values);
    let deviations: Vec<F> = values.iter().map(|&v| (v - med).abs()).collect();
    Ok(median(&deviations) / med)
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile_of_sorted<F: Scalar>(sorted: &[F], q: f64) -> F {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + from_f64::<F>(frac) * (sorted[lo + 1] - sorted[lo])
    }
}

fn require_bootstrap_input<F: Scalar>(values: &[F], settings: &BootstrapSettings) -> Result<()> {
    settings.validate()?;
    if values.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: values.len(),
        });
    }
    Ok(())
}

/// Percentile-bootstrap confidence interval of the mean or median: the
/// alpha/2 and 1-alpha/2 empirical quantiles of the resampled estimator.
/// Deterministic per seed.
pub fn bootstrap_percentile_ci<F: Scalar>(
    values: &[F],
    estimator: Estimator,
    settings: &BootstrapSettings,
) -> Result<ConfidenceInterval<F>> {
    require_bootstrap_input(values, settings)?;
    let mut rng = seed::rng_for(settings.seed, &[b"bootstrap"]);
    let n = values.len();
    let mut scratch = vec![F::zero(); n];
    let mut estimates = Vec::with_capacity(settings.resamples);
    for _ in 0..settings.resamples {
        for slot in scratch.iter_mut() {
            *slot = values[rng.random_range(0..n)];
        }
        let estimate = match estimator {
            Estimator::Mean => mean(&scratch),
            Estimator::Median => {
                scratch
                    .sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite resample values"));
                median_of_sorted(&scratch)
            }
        };
        estimates.push(estimate);
    }
    estimates.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    let alpha = 1.0 - settings.confidence_level;
    Ok(ConfidenceInterval {
        lower: quantile_of_sorted(&estimates, alpha / 2.0),
        upper: quantile_of_sorted(&estimates, 1.0 - alpha / 2.0),
        estimator,
        method: CiMethod::Percentile,
    })
}

/// Bootstrap-t confidence interval of the mean.
///
/// Each resample contributes a studentized statistic
/// `t* = (mean* - mean) / se*` with `se* = sd*/sqrt(n)`; resamples with zero
/// spread contribute `t* = 0`. The interval is
/// `[mean - q(1-a/2) * se, mean - q(a/2) * se]`. All-equal input collapses to
/// the point `[mean, mean]`.
pub fn bootstrap_t_ci<F: Scalar>(
    values: &[F],
    settings: &BootstrapSettings,
) -> Result<ConfidenceInterval<F>> {
    require_bootstrap_input(values, settings)?;
    let n = values.len();
    let sqrt_n = from_usize::<F>(n).sqrt();
    let sample_mean = mean(values);
    let se = sample_std_dev(values)? / sqrt_n;
    if se == F::zero() {
        return Ok(ConfidenceInterval {
            lower: sample_mean,
            upper: sample_mean,
            estimator: Estimator::Mean,
            method: CiMethod::TInterval,
        });
    }

    let mut rng = seed::rng_for(settings.seed, &[b"bootstrap"]);
    let mut scratch = vec![F::zero(); n];
    let mut t_stats = Vec::with_capacity(settings.resamples);
    for _ in 0..settings.resamples {
        for slot in scratch.iter_mut() {
            *slot = values[rng.random_range(0..n)];
        }
        let resample_mean = mean(&scratch);
        let resample_se = sample_std_dev(&scratch)? / sqrt_n;
        let t = if resample_se == F::zero() {
            F::zero()
        } else {
            (resample_mean - sample_mean) / resample_se
        };
        t_stats.push(t);
    }
    t_stats.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite t statistics"));
    let alpha = 1.0 - settings.confidence_level;
    let t_lower = quantile_of_sorted(&t_stats, alpha / 2.0);
    let t_upper = quantile_of_sorted(&t_stats, 1.0 - alpha / 2.0);
    Ok(ConfidenceInterval {
        lower: sample_mean - t_upper * se,
        upper: sample_mean - t_lower * se,
        estimator: Estimator::Mean,
        method: CiMethod::TInterval,
    })
}

/// Confidence interval of the score under the estimator paired with a
/// metric: the bootstrap-t interval for the t-based metric, the percentile
/// interval otherwise. The interval uses the same seed as the metric's own
/// bootstrap, so relative widths reported alongside it are exact.
pub fn score_interval<F: Scalar>(
    values: &[F],
    metric: StabilityMetricId,
    settings: &BootstrapSettings,
) -> Result<ConfidenceInterval<F>> {
    match metric {
        StabilityMetricId::Rciw2 => bootstrap_t_ci(values, settings),
        _ => bootstrap_percentile_ci(values, metric.estimator(), settings),
    }
}

/// Stability of a sample under the chosen metric. Zero on constant data;
/// always non-negative.
pub fn stability<F: Scalar>(
    values: &[F],
    metric: StabilityMetricId,
    settings: &BootstrapSettings,
) -> Result<F> {
    match metric {
        StabilityMetricId::Cv => cv(values),
        StabilityMetricId::Rmad => rmad(values),
        StabilityMetricId::Rciw1 => {
            let ci = bootstrap_percentile_ci(values, Estimator::Mean, settings)?;
            Ok(ci.width() / mean(values))
        }
        StabilityMetricId::Rciw2 => {
            let ci = bootstrap_t_ci(values, settings)?;
            Ok(ci.width() / mean(values))
        }
        StabilityMetricId::Rciw3 => {
            let ci = bootstrap_percentile_ci(values, Estimator::Median, settings)?;
            Ok(ci.width() / median(values))
        }
    }
}
