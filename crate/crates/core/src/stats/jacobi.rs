//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use alloc::vec::Vec;

use super::StatsError;
use crate::Matrix;

/// Default cap on full sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Relative symmetry tolerance accepted on input.
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix. `vectors` column `k` belongs to
/// `values[k]`; no particular order.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub vectors: Matrix,
    /// Sweeps performed.
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[(p, q)] * a[(p, q)];
        }
    }
    libm::sqrt(2.0 * s)
}

/// Diagonalizes `sym` by cyclic Jacobi rotations until the off-diagonal
/// Frobenius norm is at most `tol` (absolute).
///
/// Returns [`StatsError::NotSymmetric`] if `|a_ij − a_ji|` exceeds
/// `1e−10 · max(1, ‖A‖_F)`, and [`StatsError::MaxSweepsExceeded`] with the
/// remaining off-diagonal norm if `max_sweeps` sweeps were not enough.
pub fn jacobi_eigen(sym: &Matrix, tol: f64, max_sweeps: usize) -> Result<Eigen, StatsError> {
    let n = sym.rows();
    if sym.cols() != n {
        return Err(StatsError::NotSquare {
            rows: sym.rows(),
            cols: sym.cols(),
        });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(StatsError::InvalidTolerance(tol));
    }
    if sym.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let scale = sym.frobenius_norm().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (sym[(i, j)] - sym[(j, i)]).abs();
            if d > SYMMETRY_TOL * scale {
                return Err(StatsError::NotSymmetric {
                    row: i,
                    col: j,
                    diff: d,
                });
            }
        }
    }

    // Work on the symmetrized copy so tiny input asymmetries cannot leak in.
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (sym[(i, j)] + sym[(j, i)]);
        }
    }
    let mut v = Matrix::identity(n);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= tol {
            break;
        }
        if sweeps == max_sweeps {
            return Err(StatsError::MaxSweepsExceeded {
                sweeps,
                off_diagonal: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s, t, apq);
            }
        }
    }

    Ok(Eigen {
        values: (0..n).map(|i| a[(i, i)]).collect(),
        vectors: v,
        sweeps,
    })
}

/// Applies `A ← Jᵀ A J`, `V ← V J` for the rotation zeroing `a[p][q]`.
#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = a.rows();
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let kp = c * akp - s * akq;
        let kq = s * akp + c * akq;
        a[(k, p)] = kp;
        a[(p, k)] = kp;
        a[(k, q)] = kq;
        a[(q, k)] = kq;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
