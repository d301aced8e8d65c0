//! Roofline model: arithmetic intensity, attainable performance and
//! boundedness of kernels and workloads.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::{kernel_summary, KernelRecord, ModelError, TransactionBytes};

/// Errors from the roofline routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RooflineError {
    /// Throughput needs a positive elapsed time.
    #[error("elapsed time must be positive, got {0} s")]
    NonPositiveTime(f64),
    /// The machine has no peak for this precision.
    #[error("machine `{machine}` has no {precision} peak")]
    UnknownPrecision {
        /// Machine name.
        machine: String,
        /// Requested precision.
        precision: Precision,
    },
    /// A workload point needs at least one kernel record.
    #[error("no kernel records")]
    EmptyInput,
    /// All kernel records together took no time.
    #[error("total kernel time is zero")]
    ZeroTotalTime,
    /// Intensity must be non-negative (or +∞).
    #[error("invalid arithmetic intensity {0}")]
    InvalidIntensity(f64),
    /// Peaks and bandwidths must be positive and finite.
    #[error("machine `{machine}`: {what} must be positive, got {value}")]
    InvalidCeiling {
        /// Machine name.
        machine: String,
        /// Which ceiling.
        what: String,
        /// Offending value.
        value: f64,
    },
    /// Invalid kernel data.
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Floating-point precision of a compute ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Precision {
    /// fp64.
    Double,
    /// fp32.
    #[default]
    Single,
    /// fp16.
    Half,
}

impl Precision {
    /// All precisions, widest first.
    pub const ALL: [Precision; 3] = [Precision::Double, Precision::Single, Precision::Half];

    /// Identifier used in configs.
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Single => "single",
            Precision::Half => "half",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "double" | "fp64" => Ok(Precision::Double),
            "single" | "fp32" => Ok(Precision::Single),
            "half" | "fp16" => Ok(Precision::Half),
            other => Err(alloc::format!("unknown precision `{other}`")),
        }
    }
}

/// Compute peaks and memory-bandwidth ceilings of one device.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineModel {
    /// Label.
    pub name: String,
    /// Peak GFLOP/s per precision.
    pub peaks: BTreeMap<Precision, f64>,
    /// Main memory bandwidth in GB/s.
    pub mem_bandwidth_gbps: f64,
    /// Additional bandwidth ceilings (label, GB/s), drawn but not used for
    /// classification.
    pub extra_ceilings: Vec<(String, f64)>,
}

/// Non-fatal findings about a machine model.
#[derive(Debug, Clone, PartialEq)]
pub enum MachineWarning {
    /// A narrower precision has a lower peak than a wider one.
    PeakOrder {
        /// Narrower precision.
        narrower: Precision,
        /// Wider precision.
        wider: Precision,
    },
}

impl fmt::Display for MachineWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineWarning::PeakOrder { narrower, wider } => {
                write!(f, "{narrower} peak is below {wider} peak")
            }
        }
    }
}

impl MachineModel {
    /// Checks every ceiling is positive; returns warnings for unusual peak
    /// ordering (half ≥ single ≥ double is expected).
    pub fn validate(&self) -> Result<Vec<MachineWarning>, RooflineError> {
        let invalid = |what: String, value: f64| RooflineError::InvalidCeiling {
            machine: self.name.clone(),
            what,
            value,
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.mem_bandwidth_gbps) {
            return Err(invalid("memory bandwidth".into(), self.mem_bandwidth_gbps));
        }
        for (p, v) in &self.peaks {
            if !positive(*v) {
                return Err(invalid(alloc::format!("{p} peak"), *v));
            }
        }
        for (label, v) in &self.extra_ceilings {
            if !positive(*v) {
                return Err(invalid(label.clone(), *v));
            }
        }
        let mut warnings = Vec::new();
        for pair in Precision::ALL.windows(2) {
            let (wider, narrower) = (pair[0], pair[1]);
            if let (Some(w), Some(n)) = (self.peaks.get(&wider), self.peaks.get(&narrower)) {
                if n < w {
                    warnings.push(MachineWarning::PeakOrder { narrower, wider });
                }
            }
        }
        Ok(warnings)
    }

    /// Peak GFLOP/s at `precision`.
    pub fn peak(&self, precision: Precision) -> Result<f64, RooflineError> {
        self.peaks
            .get(&precision)
            .copied()
            .ok_or_else(|| RooflineError::UnknownPrecision {
                machine: self.name.clone(),
                precision,
            })
    }

    /// Intensity where the bandwidth slope meets the compute peak.
    pub fn ridge(&self, precision: Precision) -> Result<f64, RooflineError> {
        Ok(self.peak(precision)? / self.mem_bandwidth_gbps)
    }
}

/// A workload's or kernel's coordinate on the roofline plot.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflinePoint {
    /// Label.
    pub name: String,
    /// FLOPs per byte; `+∞` when flops > 0 and no memory traffic was seen.
    pub intensity: f64,
    /// GFLOP/s.
    pub throughput: f64,
    /// Precision the point is compared against.
    pub precision: Precision,
}

/// Position of a point relative to the ridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundedness {
    /// Left of the ridge: limited by memory bandwidth.
    MemoryBound,
    /// Right of the ridge: limited by compute.
    ComputeBound,
    /// Within a relative 1e−9 band of the ridge.
    AtRidge,
}

impl Boundedness {
    /// Identifier used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Boundedness::MemoryBound => "memory_bound",
            Boundedness::ComputeBound => "compute_bound",
            Boundedness::AtRidge => "at_ridge",
        }
    }
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// FLOPs per byte of memory traffic.
///
/// No traffic with non-zero flops yields `+∞`; no traffic and no flops
/// yields 0.
pub fn intensity(flops: u64, transactions: u64, transaction_bytes: TransactionBytes) -> f64 {
    if transactions == 0 {
        return if flops == 0 { 0.0 } else { f64::INFINITY };
    }
    flops as f64 / (transactions as f64 * f64::from(transaction_bytes.get()))
}

/// GFLOP/s achieved by `flops` operations in `time_s` seconds.
pub fn throughput(flops: u64, time_s: f64) -> Result<f64, RooflineError> {
    if !(time_s.is_finite() && time_s > 0.0) {
        return Err(RooflineError::NonPositiveTime(time_s));
    }
    Ok(flops as f64 / time_s / 1e9)
}

/// `min(peak, bandwidth × intensity)`.
pub fn attainable(
    machine: &MachineModel,
    precision: Precision,
    intensity: f64,
) -> Result<f64, RooflineError> {
    if intensity.is_nan() || intensity < 0.0 {
        return Err(RooflineError::InvalidIntensity(intensity));
    }
    let peak = machine.peak(precision)?;
    Ok(peak.min(machine.mem_bandwidth_gbps * intensity))
}

/// Relative width of the "at ridge" band.
const RIDGE_BAND: f64 = 1e-9;

/// Memory-bound iff the point's intensity is left of the ridge.
pub fn classify(
    machine: &MachineModel,
    precision: Precision,
    point: &RooflinePoint,
) -> Result<Boundedness, RooflineError> {
    if point.intensity.is_nan() || point.intensity < 0.0 {
        return Err(RooflineError::InvalidIntensity(point.intensity));
    }
    let ridge = machine.ridge(precision)?;
    Ok(if (point.intensity - ridge).abs() <= RIDGE_BAND * ridge {
        Boundedness::AtRidge
    } else if point.intensity < ridge {
        Boundedness::MemoryBound
    } else {
        Boundedness::ComputeBound
    })
}

/// Roofline point of a single kernel record.
pub fn kernel_point(
    record: &KernelRecord,
    transaction_bytes: TransactionBytes,
    precision: Precision,
) -> Result<RooflinePoint, RooflineError> {
    workload_point(
        record.class_name.clone(),
        core::slice::from_ref(record),
        transaction_bytes,
        precision,
    )
}

/// Aggregate point of a workload: `Σflops / (Σtransactions × bytes)` and
/// `Σflops / Σtime`.
pub fn workload_point(
    name: impl Into<String>,
    records: &[KernelRecord],
    transaction_bytes: TransactionBytes,
    precision: Precision,
) -> Result<RooflinePoint, RooflineError> {
    if records.is_empty() {
        return Err(RooflineError::EmptyInput);
    }
    let summary = kernel_summary(records, transaction_bytes)?;
    if summary.total_time_s == 0.0 {
        return Err(RooflineError::ZeroTotalTime);
    }
    let transactions: u64 = records.iter().map(|r| r.transactions).sum();
    Ok(RooflinePoint {
        name: name.into(),
        intensity: intensity(summary.total_flops, transactions, transaction_bytes),
        throughput: throughput(summary.total_flops, summary.total_time_s)?,
        precision,
    })
}
