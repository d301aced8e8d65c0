//! Standardization and principal component analysis of a workload/metric
//! matrix.

mod jacobi;
mod pca;

use alloc::vec::Vec;

pub use jacobi::{jacobi_eigen, Eigen, DEFAULT_MAX_SWEEPS};
pub use pca::{dominant_metric, fit_pca, project, PcaModel};

use crate::model::{MetricMatrix, MetricName};
use crate::Matrix;

/// Errors from the statistics routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    /// Standardization needs at least two rows.
    #[error("at least 2 rows are required, got {0}")]
    TooFewRows(usize),
    /// Every column was constant.
    #[error("no metric with non-zero variance")]
    NoVariance,
    /// Eigensolver input is not square.
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare {
        /// Rows.
        rows: usize,
        /// Columns.
        cols: usize,
    },
    /// Eigensolver input is not symmetric.
    #[error("matrix not symmetric at ({row},{col}), |difference| = {diff}")]
    NotSymmetric {
        /// Row of the offending pair.
        row: usize,
        /// Column of the offending pair.
        col: usize,
        /// Absolute difference.
        diff: f64,
    },
    /// Input contains NaN or infinity.
    #[error("matrix contains a non-finite value")]
    NonFinite,
    /// Tolerance must be positive and finite.
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    /// Jacobi did not converge.
    #[error("Jacobi did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal})")]
    MaxSweepsExceeded {
        /// Sweeps performed.
        sweeps: usize,
        /// Remaining off-diagonal norm.
        off_diagonal: f64,
    },
    /// Principal component index past the last component.
    #[error("principal component {index} out of range (model has {len})")]
    IndexOutOfRange {
        /// Requested index.
        index: usize,
        /// Number of components.
        len: usize,
    },
    /// A profile lacks a metric the model was fitted on.
    #[error("profile lacks metric `{0}`")]
    MissingMetric(MetricName),
}

/// Column means and sample standard deviations of the retained metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    /// Retained metric names, in column order.
    pub metric_names: Vec<MetricName>,
    /// Column means.
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor `n − 1`), all positive.
    pub stds: Vec<f64>,
}

impl Standardization {
    /// `(x − mean) / std` per retained column.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// Output of [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    /// z-scores of the retained columns.
    pub z: Matrix,
    /// Parameters used.
    pub standardization: Standardization,
    /// Zero-variance columns that were removed.
    pub dropped: Vec<MetricName>,
}

/// A column counts as constant when its sample std is at most this fraction
/// of its largest absolute value.
const CONSTANT_REL_TOL: f64 = 1e-12;

/// Z-scores every column with sample (`n − 1`) statistics; constant columns
/// are removed and listed in [`Standardized::dropped`].
pub fn standardize(matrix: &MetricMatrix) -> Result<Standardized, StatsError> {
    let n = matrix.n_workloads();
    if n < 2 {
        return Err(StatsError::TooFewRows(n));
    }
    let values = matrix.values();
    let mut kept = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut dropped = Vec::new();
    for (j, name) in matrix.metric_names().iter().enumerate() {
        let col = values.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
        let std = libm::sqrt(ss / (n - 1) as f64);
        let max_abs = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if std == 0.0 || std <= CONSTANT_REL_TOL * max_abs {
            dropped.push(name.clone());
        } else {
            kept.push(j);
            means.push(mean);
            stds.push(std);
        }
    }
    let mut z = values.select_columns(&kept);
    for i in 0..n {
        for (jj, (m, s)) in means.iter().zip(&stds).enumerate() {
            z[(i, jj)] = (z[(i, jj)] - m) / s;
        }
    }
    Ok(Standardized {
        z,
        standardization: Standardization {
            metric_names: kept
                .iter()
                .map(|&j| matrix.metric_names()[j].clone())
                .collect(),
            means,
            stds,
        },
        dropped,
    })
}
