//! Dense symmetric linear algebra: a cyclic Jacobi eigensolver and an
//! LDLᵀ solver for symmetric positive-definite systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest dimension accepted by [`symmetric_eigen`].
pub const MAX_JACOBI_DIM: usize = 512;

/// Sweeps stop once `off(A) <= JACOBI_TOLERANCE * ||A||_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
///
/// Column `k` of `vectors` is the unit-norm eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Only the upper triangle is trusted; the input is symmetrized from it.
/// Ties between equal eigenvalues keep the order in which the rotations left
/// them on the diagonal, so the output is fully deterministic.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::InvalidInput(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    if n > MAX_JACOBI_DIM {
        return Err(Error::InvalidInput(format!(
            "dense Jacobi eigensolver is limited to {MAX_JACOBI_DIM} rows, got {n}"
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }

    let mut a = DMatrix::from_fn(n, n, |i, j| if i <= j { matrix[(i, j)] } else { matrix[(j, i)] });
    let mut v = DMatrix::<f64>::identity(n, n);
    let target = JACOBI_TOLERANCE * a.norm();

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NumericalFailure {
                sweeps,
                off_norm: off,
                target,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Ratio of extreme eigenvalues; infinite when the smallest is not positive.
pub fn condition_estimate(eigenvalues: &[f64]) -> f64 {
    let (Some(&lo), Some(&hi)) = (eigenvalues.first(), eigenvalues.last()) else {
        return f64::INFINITY;
    };
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `A x = b` for symmetric positive-definite `A` with an LDLᵀ
/// factorization (no square roots, so diagonal systems are solved exactly).
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch in linear solve: {}x{} by {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > 0.0) {
            return Err(Error::SingularCovariance {
                condition: f64::INFINITY,
            });
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut lij = a[(i, j)];
            for k in 0..j {
                lij -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = lij / dj;
        }
    }

    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
    }
    for i in 0..n {
        y[i] /= d[i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[(k, i)] * y[k];
        }
    }
    Ok(y)
}
