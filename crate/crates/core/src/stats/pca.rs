use alloc::string::String;
use alloc::vec::Vec;

use super::{jacobi_eigen, standardize, Standardization, StatsError, DEFAULT_MAX_SWEEPS};
use crate::model::{MetricMatrix, MetricName, WorkloadProfile};
use crate::Matrix;

/// Tolerance factor applied to `‖C‖_F` for the eigensolver.
const JACOBI_REL_TOL: f64 = 1e-12;

/// A fitted principal component model of the workload space.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Workloads the model was fitted on, in row order.
    pub workload_names: Vec<String>,
    /// Means and stds of the retained metrics.
    pub standardization: Standardization,
    /// Metrics removed for having zero variance.
    pub dropped: Vec<MetricName>,
    /// Covariance eigenvalues, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
    /// `m × m`; column `k` is the unit loading vector of PC `k`, oriented so
    /// that its largest-magnitude entry is positive.
    pub eigenvectors: Matrix,
    /// `n × m` scores: standardized data times eigenvectors.
    pub projections: Matrix,
    /// Fraction of total variance per component.
    pub explained: Vec<f64>,
    /// The standardized data the model was fitted on.
    pub standardized: Matrix,
}

impl PcaModel {
    /// Number of components (retained metrics).
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Retained metric names.
    pub fn metric_names(&self) -> &[MetricName] {
        &self.standardization.metric_names
    }

    /// Running sum of [`PcaModel::explained`].
    pub fn cumulative_explained(&self) -> Vec<f64> {
        self.explained
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// First `k` score columns (all if `k` exceeds the component count).
    pub fn top_projections(&self, k: usize) -> Matrix {
        let k = k.min(self.n_components());
        let cols: Vec<usize> = (0..k).collect();
        self.projections.select_columns(&cols)
    }
}

/// Fits a PCA on z-scored metrics.
///
/// Covariance uses the `n − 1` divisor; eigenpairs come from
/// [`jacobi_eigen`] with tolerance `1e−12 · ‖C‖_F` and are sorted by
/// descending eigenvalue (stable on ties).
pub fn fit_pca(matrix: &MetricMatrix) -> Result<PcaModel, StatsError> {
    let st = standardize(matrix)?;
    let n = st.z.rows();
    let m = st.z.cols();
    if m == 0 {
        return Err(StatsError::NoVariance);
    }

    let mut cov = st.z.transpose().matmul(&st.z);
    for i in 0..m {
        for j in 0..m {
            cov[(i, j)] /= (n - 1) as f64;
        }
    }
    let tol = (JACOBI_REL_TOL * cov.frobenius_norm()).max(f64::MIN_POSITIVE);
    let eig = jacobi_eigen(&cov, tol, DEFAULT_MAX_SWEEPS)?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]).then(a.cmp(&b)));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.values[k].max(0.0)).collect();
    let mut eigenvectors = eig.vectors.select_columns(&order);
    for k in 0..m {
        let mut lead = 0;
        for i in 1..m {
            if eigenvectors[(i, k)].abs() > eigenvectors[(lead, k)].abs() {
                lead = i;
            }
        }
        if eigenvectors[(lead, k)] < 0.0 {
            for i in 0..m {
                eigenvectors[(i, k)] = -eigenvectors[(i, k)];
            }
        }
    }

    let total: f64 = eigenvalues.iter().sum();
    let explained = eigenvalues.iter().map(|l| l / total).collect();
    let projections = st.z.matmul(&eigenvectors);

    Ok(PcaModel {
        workload_names: matrix.workload_names().to_vec(),
        standardization: st.standardization,
        dropped: st.dropped,
        eigenvalues,
        eigenvectors,
        projections,
        explained,
        standardized: st.z,
    })
}

/// The metric with the largest absolute loading on component `pc`, with that
/// loading. Ties go to the metric that comes first in canonical order.
pub fn dominant_metric(model: &PcaModel, pc: usize) -> Result<(MetricName, f64), StatsError> {
    let m = model.n_components();
    if pc >= m {
        return Err(StatsError::IndexOutOfRange { index: pc, len: m });
    }
    let names = model.metric_names();
    let mut best = 0;
    for i in 1..m {
        let (a, b) = (
            model.eigenvectors[(i, pc)].abs(),
            model.eigenvectors[(best, pc)].abs(),
        );
        if a > b || (a == b && names[i] < names[best]) {
            best = i;
        }
    }
    Ok((names[best].clone(), model.eigenvectors[(best, pc)]))
}

/// Coordinates of `profile` in the model's component space.
pub fn project(model: &PcaModel, profile: &WorkloadProfile) -> Result<Vec<f64>, StatsError> {
    let raw = model
        .metric_names()
        .iter()
        .map(|name| {
            profile
                .metrics
                .get(name)
                .copied()
                .ok_or_else(|| StatsError::MissingMetric(name.clone()))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let z = model.standardization.apply(&raw);
    let m = model.n_components();
    Ok((0..m)
        .map(|k| (0..m).map(|i| z[i] * model.eigenvectors[(i, k)]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Suite;
    use alloc::format;
    use alloc::vec;

    fn mm(rows: &[&[f64]], names: &[&str]) -> MetricMatrix {
        MetricMatrix::new(
            (0..rows.len()).map(|i| format!("w{i}")).collect(),
            vec![Suite::Other; rows.len()],
            names.iter().map(|n| n.parse().unwrap()).collect(),
            Matrix::from_rows(rows).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn perfectly_correlated_columns() {
        let m = mm(
            &[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0], &[5.0, 10.0]],
            &["a", "b"],
        );
        let p = fit_pca(&m).unwrap();
        assert!((p.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!(p.eigenvalues[1].abs() < 1e-12);
        assert!((p.explained[0] - 1.0).abs() < 1e-12);
        assert!(p.explained[1].abs() < 1e-12);
    }

    #[test]
    fn orthogonal_standardized_columns() {
        // Columns already have mean 0, std 1 and are uncorrelated.
        let m = mm(
            &[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 1.0], &[-1.0, -1.0]],
            &["a", "b"],
        );
        let p = fit_pca(&m).unwrap();
        let scale = libm::sqrt(3.0 / 4.0);
        // sample std of ±1 over 4 rows is sqrt(4/3)
        assert!((p.standardized[(0, 0)] - scale).abs() < 1e-12);
        for (l, e) in p.eigenvalues.iter().zip(&p.explained) {
            assert!((l - 1.0).abs() < 1e-12);
            assert!((e - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_metric_picks_largest_magnitude() {
        let mut p = fit_pca(&mm(
            &[&[1.0, 0.0, 3.0], &[2.0, 5.0, 1.0], &[0.0, 1.0, 2.0]],
            &["a", "b", "c"],
        ))
        .unwrap();
        p.eigenvectors =
            Matrix::from_rows(&[[0.1, 0.0, 0.0], [-0.9, 0.0, 0.0], [0.2, 0.0, 0.0]]).unwrap();
        assert_eq!(
            dominant_metric(&p, 0).unwrap(),
            (MetricName::Extra("b".into()), -0.9)
        );
        p.eigenvectors =
            Matrix::from_rows(&[[0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]]).unwrap();
        assert_eq!(
            dominant_metric(&p, 0).unwrap().0,
            MetricName::Extra("a".into())
        );
        assert_eq!(
            dominant_metric(&p, 3),
            Err(StatsError::IndexOutOfRange { index: 3, len: 3 })
        );
    }

    #[test]
    fn tie_break_uses_canonical_order() {
        let mut p = fit_pca(&mm(
            &[&[1.0, 0.0], &[2.0, 5.0], &[0.0, 1.0]],
            &["epochs", "gpu_util_pct"],
        ))
        .unwrap();
        // metric order in the model is as given: epochs, gpu_util_pct
        p.eigenvectors = Matrix::from_rows(&[[0.5, 0.0], [0.5, 0.0]]).unwrap();
        assert_eq!(dominant_metric(&p, 0).unwrap().0, MetricName::GpuUtilPct);
    }

    #[test]
    fn projection_of_means_is_zero_and_rows_reproduce() {
        let m = mm(
            &[
                &[1.0, 7.0, 2.0],
                &[4.0, 1.0, 8.0],
                &[3.0, 3.0, 3.0],
                &[9.0, 0.5, 1.0],
            ],
            &["a", "b", "c"],
        );
        let p = fit_pca(&m).unwrap();
        let mut mean = WorkloadProfile::new("mean", Suite::Other);
        for (name, mu) in p.metric_names().iter().zip(&p.standardization.means) {
            mean = mean.with(name.clone(), *mu);
        }
        assert!(project(&p, &mean).unwrap().iter().all(|x| x.abs() < 1e-12));
        for i in 0..4 {
            let y = project(&p, &m.profile(i)).unwrap();
            for (k, yk) in y.iter().enumerate() {
                assert!((yk - p.projections[(i, k)]).abs() < 1e-10);
            }
        }
        let missing = WorkloadProfile::new("x", Suite::Other);
        assert!(matches!(
            project(&p, &missing),
            Err(StatsError::MissingMetric(_))
        ));
    }

    #[test]
    fn one_std_above_mean_on_dominant_metric() {
        let m = mm(
            &[
                &[1.0, 7.0, 2.0],
                &[4.0, 1.0, 8.0],
                &[3.0, 3.0, 3.0],
                &[9.0, 0.5, 1.0],
            ],
            &["a", "b", "c"],
        );
        let p = fit_pca(&m).unwrap();
        let (dom, loading) = dominant_metric(&p, 0).unwrap();
        let j = p.metric_names().iter().position(|x| *x == dom).unwrap();
        let mut prof = WorkloadProfile::new("x", Suite::Other);
        for (i, name) in p.metric_names().iter().enumerate() {
            let mut v = p.standardization.means[i];
            if i == j {
                v += p.standardization.stds[i];
            }
            prof = prof.with(name.clone(), v);
        }
        // z = e_j, so the PC1 score is row j of the loading matrix
        let y = project(&p, &prof).unwrap();
        assert!((y[0] - loading).abs() < 1e-12);
    }
}
