//! Domain types shared by every analysis: metric names, workload profiles,
//! the workload × metric matrix, profiler kernel records and moldable jobs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::num::NonZeroU32;
use core::str::FromStr;

use crate::Matrix;

/// Errors raised while building or validating domain values.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    /// An operation that needs at least one element got none.
    #[error("empty input")]
    EmptyInput,
    /// Two workloads share a name.
    #[error("duplicate workload name `{0}`")]
    DuplicateWorkloadName(String),
    /// A metric column appears twice.
    #[error("duplicate metric name `{0}`")]
    DuplicateMetricName(String),
    /// Analysis needs at least two workloads.
    #[error("at least 2 workloads are required, got {0}")]
    TooFewWorkloads(usize),
    /// No metric column survived ingestion.
    #[error("no metric columns left after dropping incomplete ones")]
    NoMetrics,
    /// A metric value is NaN, infinite, or negative where it must not be.
    #[error("invalid value {value} for metric `{metric}` of workload `{workload}`")]
    InvalidMetricValue {
        /// Workload name.
        workload: String,
        /// Metric identifier.
        metric: String,
        /// Offending value.
        value: f64,
    },
    /// Matrix shape does not agree with the name lists.
    #[error("matrix is {rows}x{cols} but {names} workloads and {metrics} metrics were given")]
    ShapeMismatch {
        /// Matrix rows.
        rows: usize,
        /// Matrix columns.
        cols: usize,
        /// Workload names given.
        names: usize,
        /// Metric names given.
        metrics: usize,
    },
    /// Single-device training time must be positive and finite.
    #[error("job `{job}`: training time must be positive, got {value}")]
    NonPositiveTime {
        /// Job name.
        job: String,
        /// Offending value.
        value: f64,
    },
    /// Speedups must be positive and finite.
    #[error("job `{job}`: speedup at width {width} must be positive, got {value}")]
    NonPositiveSpeedup {
        /// Job name.
        job: String,
        /// Device count.
        width: u32,
        /// Offending value.
        value: f64,
    },
    /// The speedup at width 1 is the reference and must equal 1.
    #[error("job `{job}`: speedup at width 1 must be 1.0, got {value}")]
    InvalidBaseSpeedup {
        /// Job name.
        job: String,
        /// Offending value.
        value: f64,
    },
    /// Width 0 is not a device count.
    #[error("job `{0}`: width 0 is not allowed")]
    ZeroWidth(String),
    /// Two jobs share a name.
    #[error("duplicate job name `{0}`")]
    DuplicateJobName(String),
    /// A kernel record has a negative or non-finite time.
    #[error("kernel class `{class}`: invalid time {value} ms")]
    InvalidKernelTime {
        /// Kernel class name.
        class: String,
        /// Offending value.
        value: f64,
    },
    /// Integer totals overflowed 64 bits.
    #[error("integer overflow while aggregating kernel records")]
    Overflow,
}

/// Identifier of one workload characteristic.
///
/// The eight canonical metrics come first, in this order; anything else is an
/// [`MetricName::Extra`] and sorts after them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricName {
    /// PCIe utilization (%).
    PcieUtilPct,
    /// GPU utilization (%), summed over devices.
    GpuUtilPct,
    /// CPU utilization (%).
    CpuUtilPct,
    /// Host (DDR) memory footprint (MB).
    DdrFootprintMb,
    /// Device (HBM2) memory footprint (MB).
    Hbm2FootprintMb,
    /// Floating-point throughput (GFLOP/s).
    FlopThroughputGflops,
    /// Memory throughput (GB/s).
    MemThroughputGbps,
    /// Number of training epochs.
    Epochs,
    /// User-supplied metric, e.g. `nvlink_mbps`.
    Extra(String),
}

impl MetricName {
    /// The eight canonical metrics in canonical order.
    pub const CANONICAL: [MetricName; 8] = [
        MetricName::PcieUtilPct,
        MetricName::GpuUtilPct,
        MetricName::CpuUtilPct,
        MetricName::DdrFootprintMb,
        MetricName::Hbm2FootprintMb,
        MetricName::FlopThroughputGflops,
        MetricName::MemThroughputGbps,
        MetricName::Epochs,
    ];

    /// Identifier as used in file headers.
    pub fn as_str(&self) -> &str {
        match self {
            MetricName::PcieUtilPct => "pcie_util_pct",
            MetricName::GpuUtilPct => "gpu_util_pct",
            MetricName::CpuUtilPct => "cpu_util_pct",
            MetricName::DdrFootprintMb => "ddr_footprint_mb",
            MetricName::Hbm2FootprintMb => "hbm2_footprint_mb",
            MetricName::FlopThroughputGflops => "flop_throughput_gflops",
            MetricName::MemThroughputGbps => "mem_throughput_gbps",
            MetricName::Epochs => "epochs",
            MetricName::Extra(s) => s,
        }
    }

    /// Position in the canonical list, `None` for extras.
    pub fn canonical_index(&self) -> Option<usize> {
        Self::CANONICAL.iter().position(|m| m == self)
    }

    /// Canonical metrics are rates, sizes or counts and may not be negative.
    pub fn requires_non_negative(&self) -> bool {
        !matches!(self, MetricName::Extra(_))
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error for an identifier that cannot name a metric.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a valid metric identifier")]
pub struct InvalidMetricName(pub String);

impl FromStr for MetricName {
    type Err = InvalidMetricName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(m) = Self::CANONICAL.iter().find(|m| m.as_str() == s) {
            return Ok(m.clone());
        }
        let valid = !s.is_empty()
            && s != "name"
            && s != "suite"
            && s.chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
        if valid {
            Ok(MetricName::Extra(s.to_string()))
        } else {
            Err(InvalidMetricName(s.to_string()))
        }
    }
}

/// Benchmark suite a workload belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Suite {
    /// MLPerf training.
    MLPerf,
    /// DAWNBench.
    DAWNBench,
    /// DeepBench kernels.
    DeepBench,
    /// Anything else.
    #[default]
    Other,
}

impl Suite {
    /// Identifier as used in files.
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::MLPerf => "MLPerf",
            Suite::DAWNBench => "DAWNBench",
            Suite::DeepBench => "DeepBench",
            Suite::Other => "Other",
        }
    }

    /// Case-insensitive parse; unknown or empty labels map to `Other`.
    pub fn parse_lenient(s: &str) -> Suite {
        match s.trim().to_ascii_lowercase().as_str() {
            "mlperf" => Suite::MLPerf,
            "dawnbench" => Suite::DAWNBench,
            "deepbench" => Suite::DeepBench,
            _ => Suite::Other,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One benchmark's named metric vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkloadProfile {
    /// Workload name, e.g. `MLPf_Res50_TF`.
    pub name: String,
    /// Suite label.
    pub suite: Suite,
    /// Metric values; a missing key means the value was not measured.
    pub metrics: BTreeMap<MetricName, f64>,
}

impl WorkloadProfile {
    /// Profile without metrics.
    pub fn new(name: impl Into<String>, suite: Suite) -> Self {
        Self {
            name: name.into(),
            suite,
            metrics: BTreeMap::new(),
        }
    }

    /// Builder-style metric insertion.
    pub fn with(mut self, metric: MetricName, value: f64) -> Self {
        self.metrics.insert(metric, value);
        self
    }
}

/// Workload × metric table (row = workload, column = metric) with no
/// missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    workload_names: Vec<String>,
    suites: Vec<Suite>,
    metric_names: Vec<MetricName>,
    values: Matrix,
}

/// Result of assembling profiles into a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledMatrix {
    /// Complete matrix.
    pub matrix: MetricMatrix,
    /// Columns dropped because at least one workload lacked them.
    pub dropped: Vec<MetricName>,
}

fn check_value(workload: &str, metric: &MetricName, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() || (metric.requires_non_negative() && value < 0.0) {
        return Err(ModelError::InvalidMetricValue {
            workload: workload.to_string(),
            metric: metric.to_string(),
            value,
        });
    }
    Ok(())
}

impl MetricMatrix {
    /// Builds and validates a matrix.
    pub fn new(
        workload_names: Vec<String>,
        suites: Vec<Suite>,
        metric_names: Vec<MetricName>,
        values: Matrix,
    ) -> Result<Self, ModelError> {
        if values.rows() != workload_names.len()
            || values.cols() != metric_names.len()
            || suites.len() != workload_names.len()
        {
            return Err(ModelError::ShapeMismatch {
                rows: values.rows(),
                cols: values.cols(),
                names: workload_names.len(),
                metrics: metric_names.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for n in &workload_names {
            if !seen.insert(n.as_str()) {
                return Err(ModelError::DuplicateWorkloadName(n.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for m in &metric_names {
            if !seen.insert(m) {
                return Err(ModelError::DuplicateMetricName(m.to_string()));
            }
        }
        for (i, w) in workload_names.iter().enumerate() {
            for (j, m) in metric_names.iter().enumerate() {
                check_value(w, m, values[(i, j)])?;
            }
        }
        Ok(Self {
            workload_names,
            suites,
            metric_names,
            values,
        })
    }

    /// Assembles profiles into a matrix.
    ///
    /// Canonical metrics come first in canonical order, extras follow in the
    /// order given by `column_order` (extras absent from it are appended in
    /// sorted order). A column missing for any workload is dropped and listed
    /// in [`AssembledMatrix::dropped`]. Fewer than two workloads is an error.
    pub fn from_profiles(
        profiles: &[WorkloadProfile],
        column_order: &[MetricName],
    ) -> Result<AssembledMatrix, ModelError> {
        if profiles.len() < 2 {
            return Err(ModelError::TooFewWorkloads(profiles.len()));
        }
        let mut names = BTreeSet::new();
        for p in profiles {
            if !names.insert(p.name.as_str()) {
                return Err(ModelError::DuplicateWorkloadName(p.name.clone()));
            }
        }

        let mut all: Vec<MetricName> = Vec::new();
        let push = |m: &MetricName, all: &mut Vec<MetricName>| {
            if !all.contains(m) {
                all.push(m.clone());
            }
        };
        for m in MetricName::CANONICAL.iter() {
            if column_order.contains(m) || profiles.iter().any(|p| p.metrics.contains_key(m)) {
                push(m, &mut all);
            }
        }
        for m in column_order
            .iter()
            .filter(|m| m.canonical_index().is_none())
        {
            push(m, &mut all);
        }
        let mut rest: BTreeSet<&MetricName> = BTreeSet::new();
        for p in profiles {
            rest.extend(p.metrics.keys().filter(|m| m.canonical_index().is_none()));
        }
        for m in rest {
            push(m, &mut all);
        }

        let (kept, dropped): (Vec<_>, Vec<_>) = all
            .into_iter()
            .partition(|m| profiles.iter().all(|p| p.metrics.contains_key(m)));
        if kept.is_empty() {
            return Err(ModelError::NoMetrics);
        }
        let mut values = Matrix::zeros(profiles.len(), kept.len());
        for (i, p) in profiles.iter().enumerate() {
            for (j, m) in kept.iter().enumerate() {
                values[(i, j)] = p.metrics[m];
            }
        }
        let matrix = Self::new(
            profiles.iter().map(|p| p.name.clone()).collect(),
            profiles.iter().map(|p| p.suite).collect(),
            kept,
            values,
        )?;
        Ok(AssembledMatrix { matrix, dropped })
    }

    /// Workload names, in row order.
    pub fn workload_names(&self) -> &[String] {
        &self.workload_names
    }

    /// Suite label per row.
    pub fn suites(&self) -> &[Suite] {
        &self.suites
    }

    /// Metric names, in column order.
    pub fn metric_names(&self) -> &[MetricName] {
        &self.metric_names
    }

    /// The values.
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Number of workloads.
    pub fn n_workloads(&self) -> usize {
        self.workload_names.len()
    }

    /// Number of metrics.
    pub fn n_metrics(&self) -> usize {
        self.metric_names.len()
    }

    /// Row index of a workload.
    pub fn workload_index(&self, name: &str) -> Option<usize> {
        self.workload_names.iter().position(|n| n == name)
    }

    /// Column index of a metric.
    pub fn metric_index(&self, metric: &MetricName) -> Option<usize> {
        self.metric_names.iter().position(|m| m == metric)
    }

    /// Row `i` as a profile.
    pub fn profile(&self, i: usize) -> WorkloadProfile {
        WorkloadProfile {
            name: self.workload_names[i].clone(),
            suite: self.suites[i],
            metrics: self
                .metric_names
                .iter()
                .cloned()
                .zip(self.values.row(i).iter().copied())
                .collect(),
        }
    }

    /// Copy keeping only the listed columns. Row order is untouched.
    pub fn select_metrics(&self, cols: &[usize]) -> MetricMatrix {
        MetricMatrix {
            workload_names: self.workload_names.clone(),
            suites: self.suites.clone(),
            metric_names: cols.iter().map(|&j| self.metric_names[j].clone()).collect(),
            values: self.values.select_columns(cols),
        }
    }

    /// Copy with rows reordered (or subset) by index.
    pub fn select_workloads(&self, rows: &[usize]) -> MetricMatrix {
        MetricMatrix {
            workload_names: rows
                .iter()
                .map(|&i| self.workload_names[i].clone())
                .collect(),
            suites: rows.iter().map(|&i| self.suites[i]).collect(),
            metric_names: self.metric_names.clone(),
            values: self.values.select_rows(rows),
        }
    }
}

/// Size of one device-memory transaction in bytes. Never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransactionBytes(NonZeroU32);

impl TransactionBytes {
    /// 32-byte sectors, which reproduce the appendix intensity column.
    pub const DEFAULT: TransactionBytes = TransactionBytes(match NonZeroU32::new(32) {
        Some(v) => v,
        None => unreachable!(),
    });

    /// `None` for zero.
    pub fn new(bytes: u32) -> Option<Self> {
        NonZeroU32::new(bytes).map(Self)
    }

    /// Byte count.
    pub fn get(self) -> u32 {
        self.0.get()
    }
}

impl Default for TransactionBytes {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// One row of a profiler kernel-class summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KernelRecord {
    /// Kernel class, e.g. `relu` or `MM_4x1`.
    pub class_name: String,
    /// Total GPU time in milliseconds.
    pub time_ms: f64,
    /// Number of launches.
    pub calls: u64,
    /// Number of distinct kernels in the class.
    pub unique_kernels: u64,
    /// Floating-point operations.
    pub flops: u64,
    /// Device-memory transactions.
    pub transactions: u64,
}

impl KernelRecord {
    /// Checks `time_ms` is finite and non-negative.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.time_ms.is_finite() || self.time_ms < 0.0 {
            return Err(ModelError::InvalidKernelTime {
                class: self.class_name.clone(),
                value: self.time_ms,
            });
        }
        Ok(())
    }
}

/// Totals over a set of kernel records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSummary {
    /// Σ flops.
    pub total_flops: u64,
    /// Σ transactions × transaction size.
    pub total_bytes: u64,
    /// Σ time, in seconds.
    pub total_time_s: f64,
}

/// Aggregates kernel records. Fails on an empty list.
pub fn kernel_summary(
    records: &[KernelRecord],
    transaction_bytes: TransactionBytes,
) -> Result<KernelSummary, ModelError> {
    if records.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let mut flops = 0u64;
    let mut transactions = 0u64;
    let mut time_ms = 0.0;
    for r in records {
        r.validate()?;
        flops = flops.checked_add(r.flops).ok_or(ModelError::Overflow)?;
        transactions = transactions
            .checked_add(r.transactions)
            .ok_or(ModelError::Overflow)?;
        time_ms += r.time_ms;
    }
    let total_bytes = transactions
        .checked_mul(u64::from(transaction_bytes.get()))
        .ok_or(ModelError::Overflow)?;
    Ok(KernelSummary {
        total_flops: flops,
        total_bytes,
        total_time_s: time_ms / 1000.0,
    })
}

/// A moldable training job: single-device time plus measured speedups.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    name: String,
    t1_minutes: f64,
    speedup: BTreeMap<u32, f64>,
}

impl Job {
    /// Validates and builds a job. Width 1 with speedup 1.0 is inserted when
    /// absent.
    pub fn new(
        name: impl Into<String>,
        t1_minutes: f64,
        speedups: impl IntoIterator<Item = (u32, f64)>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if !(t1_minutes.is_finite() && t1_minutes > 0.0) {
            return Err(ModelError::NonPositiveTime {
                job: name,
                value: t1_minutes,
            });
        }
        let mut speedup = BTreeMap::new();
        for (width, value) in speedups {
            if width == 0 {
                return Err(ModelError::ZeroWidth(name));
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositiveSpeedup {
                    job: name,
                    width,
                    value,
                });
            }
            if width == 1 && value != 1.0 {
                return Err(ModelError::InvalidBaseSpeedup { job: name, value });
            }
            speedup.insert(width, value);
        }
        speedup.insert(1, 1.0);
        Ok(Self {
            name,
            t1_minutes,
            speedup,
        })
    }

    /// Job name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Training time on one device, in minutes.
    pub fn t1_minutes(&self) -> f64 {
        self.t1_minutes
    }

    /// Speedup per measured width (always contains width 1).
    pub fn speedups(&self) -> &BTreeMap<u32, f64> {
        &self.speedup
    }

    /// Speedup at `width`, if measured.
    pub fn speedup(&self, width: u32) -> Option<f64> {
        self.speedup.get(&width).copied()
    }

    /// Measured widths in ascending order.
    pub fn widths(&self) -> impl Iterator<Item = u32> + '_ {
        self.speedup.keys().copied()
    }
}

/// Rejects job lists with repeated names.
pub fn check_unique_job_names(jobs: &[Job]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for j in jobs {
        if !seen.insert(j.name()) {
            return Err(ModelError::DuplicateJobName(j.name().to_string()));
        }
    }
    Ok(())
}
