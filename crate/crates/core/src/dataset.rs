//! Measurement data model: level schemas, execution configurations, dataset
//! ingestion and validation, candidate enumeration, duration accounting and
//! RMIT schedule generation.
//!
//! A measurement campaign repeats every microbenchmark across nested levels
//! (e.g. cloud instances, suite runs, iterations, seconds). The dataset holds
//! one value per cell of the full Cartesian grid; shorter runs are simulated
//! by prefix selection over the per-level indices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{format_indices, Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// One repetition level, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub name: String,
    pub count: usize,
}

/// Direction in which measurement values improve. Metadata only; carried
/// through to reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSemantics {
    #[default]
    LowerIsBetter,
    HigherIsBetter,
}

/// Repetition-level schema of a measurement campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSchema {
    levels: Vec<Level>,
    leaf_duration_s: f64,
    parallel_levels: BTreeSet<String>,
}

impl LevelSchema {
    /// Builds a schema, checking the level invariants.
    ///
    /// `parallel_levels` names levels whose repetitions run concurrently and
    /// therefore add no wall-clock time (e.g. cloud instances).
    pub fn new(
        levels: Vec<Level>,
        leaf_duration_s: f64,
        parallel_levels: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::validation("schema must declare at least one level"));
        }
        let mut seen = BTreeSet::new();
        for level in &levels {
            if level.count < 1 {
                return Err(Error::validation(format!(
                    "level {} must have count >= 1",
                    level.name
                )));
            }
            if !seen.insert(level.name.clone()) {
                return Err(Error::validation(format!(
                    "duplicate level name: {}",
                    level.name
                )));
            }
        }
        if !(leaf_duration_s > 0.0) || !leaf_duration_s.is_finite() {
            return Err(Error::validation("leaf_duration_s must be positive"));
        }
        let parallel_levels: BTreeSet<String> = parallel_levels.into_iter().collect();
        for name in &parallel_levels {
            if !seen.contains(name) {
                return Err(Error::validation(format!(
                    "parallel level {name} is not a declared level"
                )));
            }
        }
        Ok(Self {
            levels,
            leaf_duration_s,
            parallel_levels,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Number of levels.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.count).collect()
    }

    pub fn leaf_duration_s(&self) -> f64 {
        self.leaf_duration_s
    }

    pub fn parallel_levels(&self) -> &BTreeSet<String> {
        &self.parallel_levels
    }

    pub fn is_parallel(&self, level_index: usize) -> bool {
        self.parallel_levels
            .contains(&self.levels[level_index].name)
    }

    pub fn level_index(&self, name: &str) -> Option<usize> {
        self.levels.iter().position(|l| l.name == name)
    }

    /// The full execution configuration: all level counts.
    pub fn full_configuration(&self) -> ExecutionConfiguration {
        ExecutionConfiguration::new(self.counts()).expect("schema counts are valid")
    }

    /// Returns a copy with the count of one level replaced.
    fn with_level_count(&self, level_index: usize, count: usize) -> Result<Self> {
        let mut levels = self.levels.clone();
        levels[level_index].count = count;
        LevelSchema::new(
            levels,
            self.leaf_duration_s,
            self.parallel_levels.iter().cloned(),
        )
    }
}

/// Per-level repetition counts, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExecutionConfiguration {
    counts: Vec<usize>,
}

impl ExecutionConfiguration {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::validation(
                "execution configuration must have at least one level",
            ));
        }
        if counts.iter().any(|&c| c < 1) {
            return Err(Error::validation(
                "execution configuration entries must be >= 1",
            ));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of data points the configuration collects.
    pub fn repetitions(&self) -> usize {
        self.counts.iter().product()
    }

    /// Entry-wise bounds check against a schema.
    pub fn validate_against(&self, schema: &LevelSchema) -> Result<()> {
        if self.counts.len() != schema.len() {
            return Err(Error::validation(format!(
                "configuration has {} levels, schema has {}",
                self.counts.len(),
                schema.len()
            )));
        }
        for (k, (&c, level)) in self.counts.iter().zip(schema.levels()).enumerate() {
            if c > level.count {
                return Err(Error::validation(format!(
                    "configuration entry {} at level {} ({}) exceeds schema count {}",
                    c, k, level.name, level.count
                )));
            }
        }
        Ok(())
    }

    /// The `1x2x5` notation used in result files.
    pub fn label(&self) -> String {
        self.counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

impl fmt::Display for ExecutionConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for ExecutionConfiguration {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl FromStr for ExecutionConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split('x')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::validation(format!("invalid configuration label: {s}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ExecutionConfiguration::new(counts)
    }
}

/// One raw data point.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord<F> {
    pub benchmark: String,
    /// 1-based per-level indices, outermost first.
    pub indices: Vec<usize>,
    pub value: F,
}

/// Bookkeeping for a statically discarded warmup phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WarmupInfo {
    pub level_index: usize,
    pub level_name: String,
    /// Number of discarded repetitions at that level.
    pub count: usize,
}

/// All measurement values of one suite run campaign, complete over the
/// Cartesian grid of the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDataset<F> {
    schema: LevelSchema,
    unit: String,
    value_semantics: ValueSemantics,
    /// Dense row-major values per benchmark, outermost level slowest.
    benchmarks: BTreeMap<String, Vec<F>>,
    warmup: Option<WarmupInfo>,
}

impl<F: Scalar> MeasurementDataset<F> {
    /// Builds and validates a dataset from raw records.
    ///
    /// Every benchmark must cover the full index grid exactly once.
    pub fn from_records(
        schema: LevelSchema,
        unit: impl Into<String>,
        value_semantics: ValueSemantics,
        records: impl IntoIterator<Item = MeasurementRecord<F>>,
    ) -> Result<Self> {
        let counts = schema.counts();
        let cell_count = counts.iter().product::<usize>();
        let level_strides = strides(&counts);

        let mut cells: BTreeMap<String, Vec<Option<F>>> = BTreeMap::new();
        let mut any = false;
        for record in records {
            any = true;
            if record.indices.len() != counts.len() {
                return Err(Error::validation(format!(
                    "record for {} has {} indices, schema has {} levels",
                    record.benchmark,
                    record.indices.len(),
                    counts.len()
                )));
            }
            for (k, (&idx, &count)) in record.indices.iter().zip(&counts).enumerate() {
                if idx < 1 || idx > count {
                    return Err(Error::validation(format!(
                        "index {} at level {} out of range 1..={} for {}",
                        idx, k, count, record.benchmark
                    )));
                }
            }
            if !(record.value > F::zero()) || !record.value.is_finite() {
                return Err(Error::validation(format!(
                    "non-positive value {} for {} at index ({})",
                    record.value,
                    record.benchmark,
                    format_indices(&record.indices)
                )));
            }
            let offset = offset_of(&record.indices, &level_strides);
            let slot = &mut cells
                .entry(record.benchmark.clone())
                .or_insert_with(|| vec![None; cell_count])[offset];
            if slot.is_some() {
                return Err(Error::DuplicateCell {
                    benchmark: record.benchmark,
                    indices: format_indices(&record.indices),
                });
            }
            *slot = Some(record.value);
        }
        if !any {
            return Err(Error::validation("dataset contains no records"));
        }

        let mut benchmarks = BTreeMap::new();
        for (benchmark, grid) in cells {
            if let Some(gap) = grid.iter().position(|v| v.is_none()) {
                return Err(Error::MissingCell {
                    benchmark,
                    indices: format_indices(&tuple_of(gap, &level_strides, &counts)),
                });
            }
            benchmarks.insert(benchmark, grid.into_iter().map(|v| v.unwrap()).collect());
        }

        Ok(Self {
            schema,
            unit: unit.into(),
            value_semantics,
            benchmarks,
            warmup: None,
        })
    }

    pub fn schema(&self) -> &LevelSchema {
        &self.schema
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn value_semantics(&self) -> ValueSemantics {
        self.value_semantics
    }

    pub fn warmup(&self) -> Option<&WarmupInfo> {
        self.warmup.as_ref()
    }

    /// Benchmark ids in deterministic (sorted) order.
    pub fn benchmark_names(&self) -> impl Iterator<Item = &str> {
        self.benchmarks.keys().map(|s| s.as_str())
    }

    pub fn benchmark_count(&self) -> usize {
        self.benchmarks.len()
    }

    pub fn contains(&self, benchmark: &str) -> bool {
        self.benchmarks.contains_key(benchmark)
    }

    /// Full configuration of this dataset.
    pub fn full_configuration(&self) -> ExecutionConfiguration {
        self.schema.full_configuration()
    }

    /// All values of one benchmark in index-lexicographic order.
    pub fn values(&self, benchmark: &str) -> Result<&[F]> {
        self.benchmarks
            .get(benchmark)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownBenchmark(benchmark.to_string()))
    }

    /// Values a run under configuration `e` would have collected: exactly the
    /// data points whose index tuple is entry-wise <= `e`, in
    /// index-lexicographic order (outermost level slowest).
    pub fn get_measurements(
        &self,
        e: &ExecutionConfiguration,
        benchmark: &str,
    ) -> Result<Vec<F>> {
        e.validate_against(&self.schema)?;
        let values = self.values(benchmark)?;
        let level_strides = strides(&self.schema.counts());
        let mut out = Vec::with_capacity(e.repetitions());
        let mut idx = vec![1usize; e.len()];
        loop {
            out.push(values[offset_of(&idx, &level_strides)]);
            if !advance(&mut idx, e.counts()) {
                return Ok(out);
            }
        }
    }

    /// Removes the first `warmup_count` repetitions of the named level and
    /// shrinks the schema accordingly. The discarded span is remembered so
    /// duration reports can split total time into warmup and measurement
    /// phases.
    pub fn discard_warmup(&self, level_name: &str, warmup_count: usize) -> Result<Self> {
        if warmup_count == 0 {
            return Ok(self.clone());
        }
        let level_index = self.schema.level_index(level_name).ok_or_else(|| {
            Error::validation(format!("unknown level for warmup discard: {level_name}"))
        })?;
        let level_count = self.schema.levels()[level_index].count;
        if warmup_count >= level_count {
            return Err(Error::validation(format!(
                "warmup count {warmup_count} leaves no measurement repetitions at level {level_name} (count {level_count})"
            )));
        }
        if let Some(existing) = &self.warmup {
            return Err(Error::validation(format!(
                "warmup already discarded at level {}",
                existing.level_name
            )));
        }

        let counts = self.schema.counts();
        let new_schema = self
            .schema
            .with_level_count(level_index, level_count - warmup_count)?;
        let level_strides = strides(&counts);

        let mut benchmarks = BTreeMap::new();
        for (name, values) in &self.benchmarks {
            let mut kept = Vec::with_capacity(values.len() / level_count * (level_count - warmup_count));
            let mut idx = vec![1usize; counts.len()];
            loop {
                if idx[level_index] > warmup_count {
                    kept.push(values[offset_of(&idx, &level_strides)]);
                }
                if !advance(&mut idx, &counts) {
                    break;
                }
            }
            benchmarks.insert(name.clone(), kept);
        }

        Ok(Self {
            schema: new_schema,
            unit: self.unit.clone(),
            value_semantics: self.value_semantics,
            benchmarks,
            warmup: Some(WarmupInfo {
                level_index,
                level_name: level_name.to_string(),
                count: warmup_count,
            }),
        })
    }

    /// Wall-clock seconds the warmup phase costs under configuration `e`
    /// (0 when no warmup was discarded). The warmup repetitions replace the
    /// warmup level's own count; outer and inner repetitions of `e` re-run
    /// them as usual.
    pub fn warmup_duration(&self, e: &ExecutionConfiguration) -> f64 {
        match &self.warmup {
            None => 0.0,
            Some(info) => {
                let mut counts = e.counts().to_vec();
                counts[info.level_index] = info.count;
                let warm = ExecutionConfiguration::new(counts).expect("counts stay positive");
                execution_duration(&warm, &self.schema)
            }
        }
    }
}

/// Lower bound on the wall-clock seconds configuration `e` takes: the product
/// of all non-parallel repetition counts times the per-leaf duration,
/// excluding any harness overhead.
pub fn execution_duration(e: &ExecutionConfiguration, schema: &LevelSchema) -> f64 {
    assert_eq!(
        e.len(),
        schema.len(),
        "configuration and schema must have the same number of levels"
    );
    let serial: usize = e
        .counts()
        .iter()
        .enumerate()
        .filter(|(k, _)| !schema.is_parallel(*k))
        .map(|(_, &c)| c)
        .product();
    serial as f64 * schema.leaf_duration_s()
}

/// All execution configurations entry-wise between `(1,...,1)` and `e_max`,
/// inclusive. The order is duration-ascending (by total repetition count),
/// ties broken lexicographically with the outermost level first.
pub fn find_all_smaller_configurations(
    e_max: &ExecutionConfiguration,
) -> Vec<ExecutionConfiguration> {
    let mut out = Vec::with_capacity(e_max.repetitions());
    let mut idx = vec![1usize; e_max.len()];
    loop {
        out.push(ExecutionConfiguration::new(idx.clone()).expect("entries start at 1"));
        if !advance(&mut idx, e_max.counts()) {
            break;
        }
    }
    out.sort_unstable_by(|a, b| {
        (a.repetitions(), a.counts()).cmp(&(b.repetitions(), b.counts()))
    });
    out
}

/// Suite-run orderings for randomized interleaved execution: each suite run
/// contains every benchmark exactly `iterations_per_suite_run` times, in a
/// seeded uniform shuffle.
pub fn rmit_schedule(
    benchmarks: &[String],
    iterations_per_suite_run: usize,
    suite_runs: usize,
    seed_value: u64,
) -> Result<Vec<Vec<String>>> {
    if benchmarks.is_empty() {
        return Err(Error::validation("benchmark list must not be empty"));
    }
    if iterations_per_suite_run < 1 || suite_runs < 1 {
        return Err(Error::validation(
            "iterations per suite run and suite runs must be >= 1",
        ));
    }
    let mut rng = seed::rng_for(seed_value, &[b"rmit"]);
    let mut schedule = Vec::with_capacity(suite_runs);
    for _ in 0..suite_runs {
        let mut run: Vec<String> = benchmarks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.clone(), iterations_per_suite_run))
            .collect();
        run.shuffle(&mut rng);
        schedule.push(run);
    }
    Ok(schedule)
}

/// Parsed sidecar schema document.
#[derive(Debug, Clone)]
pub struct SchemaConfig {
    pub schema: LevelSchema,
    pub unit: String,
    pub value_semantics: ValueSemantics,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSchemaConfig {
    levels: Vec<Level>,
    leaf_duration_s: f64,
    #[serde(default)]
    parallel_levels: Vec<String>,
    unit: String,
    #[serde(default)]
    value_semantics: ValueSemantics,
}

impl SchemaConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawSchemaConfig = serde_json::from_str(text)?;
        Ok(Self {
            schema: LevelSchema::new(raw.levels, raw.leaf_duration_s, raw.parallel_levels)?,
            unit: raw.unit,
            value_semantics: raw.value_semantics,
        })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawSchemaConfig {
            levels: self.schema.levels().to_vec(),
            leaf_duration_s: self.schema.leaf_duration_s(),
            parallel_levels: self.schema.parallel_levels().iter().cloned().collect(),
            unit: self.unit.clone(),
            value_semantics: self.value_semantics,
        };
        serde_json::to_string_pretty(&raw).expect("schema serializes")
    }
}

/// Loads a measurement CSV (`benchmark,<level_1>,...,<level_l>,value`)
/// against a parsed schema sidecar and validates grid completeness.
pub fn load_dataset<F: Scalar>(
    path: impl AsRef<Path>,
    config: &SchemaConfig,
) -> Result<MeasurementDataset<F>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;

    let expected: Vec<String> = std::iter::once("benchmark".to_string())
        .chain(config.schema.levels().iter().map(|l| l.name.clone()))
        .chain(std::iter::once("value".to_string()))
        .collect();
    let headers = reader.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected.iter().map(|s| s.as_str()).collect::<Vec<_>>() {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "header mismatch: expected {}, got {}",
                expected.join(","),
                got.join(",")
            ),
        });
    }

    let counts = config.schema.counts();
    let levels = config.schema.len();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != levels + 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", levels + 2, row.len()),
            });
        }
        let benchmark = row[0].to_string();
        if benchmark.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty benchmark id".to_string(),
            });
        }
        let mut indices = Vec::with_capacity(levels);
        for k in 0..levels {
            let field = &row[k + 1];
            let idx: usize = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid index {:?} for level {}", field, expected[k + 1]),
            })?;
            if idx < 1 || idx > counts[k] {
                return Err(Error::validation(format!(
                    "line {}: index {} for level {} out of range 1..={}",
                    line,
                    idx,
                    expected[k + 1],
                    counts[k]
                )));
            }
            indices.push(idx);
        }
        let value_field = row[levels + 1].trim();
        let value: f64 = value_field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid value {value_field:?}"),
        })?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::validation(format!(
                "line {line}: non-positive value {value_field} for {benchmark}"
            )));
        }
        records.push(MeasurementRecord {
            benchmark,
            indices,
            value: crate::scalar::from_f64::<F>(value),
        });
    }

    MeasurementDataset::from_records(
        config.schema.clone(),
        config.unit.clone(),
        config.value_semantics,
        records,
    )
}

/// Row-major strides for 1-based index tuples, outermost first.
fn strides(counts: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; counts.len()];
    for k in (0..counts.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * counts[k + 1];
    }
    s
}

fn offset_of(indices: &[usize], strides: &[usize]) -> usize {
    indices
        .iter()
        .zip(strides)
        .map(|(&i, &s)| (i - 1) * s)
        .sum()
}

fn tuple_of(offset: usize, strides: &[usize], counts: &[usize]) -> Vec<usize> {
    let mut rest = offset;
    strides
        .iter()
        .zip(counts)
        .map(|(&s, &c)| {
            let i = (rest / s) % c;
            rest -= i * s;
            i + 1
        })
        .collect()
}

/// Advances a 1-based odometer over `bounds`; false once exhausted.
fn advance(idx: &mut [usize], bounds: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        if idx[k] < bounds[k] {
            idx[k] += 1;
            for slot in idx[k + 1..].iter_mut() {
                *slot = 1;
            }
            return true;
        }
    }
    false
}
