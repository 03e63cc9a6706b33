//! ILU(0)-preconditioned BiCGSTAB for the sparse systems of the time stepper.
//!
//! Jacobians of the product-approximated load are not symmetric
//! (`M̄ · diag(cos u)`), so a nonsymmetric Krylov method is used throughout.

use thiserror::Error;

use super::CsrMatrix;
use crate::scalar::{axpy, dot, norm2, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Target for `‖b − Ax‖ / ‖b‖`. Clamped below by a few machine epsilons.
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_iterations: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("matrix has a zero pivot in row {row}")]
    ZeroPivot { row: usize },
    #[error("no convergence after {iterations} iterations (relative residual {relative_residual:e})")]
    NotConverged { iterations: usize, relative_residual: f64 },
    #[error("dimension mismatch: matrix {rows}x{cols}, right-hand side {rhs}")]
    Dimension { rows: usize, cols: usize, rhs: usize },
}

/// Incomplete LU factorisation without fill on the pattern of `A`.
pub struct Ilu0<T> {
    lu: CsrMatrix<T>,
    diag: Vec<usize>,
}

impl<T: Scalar> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, SolverError> {
        let n = a.n_rows();
        let mut lu = a.clone();
        let pattern = lu.pattern().clone();
        let diag: Vec<usize> =
            (0..n).map(|i| pattern.find(i, i).ok_or(SolverError::ZeroPivot { row: i })).collect::<Result<_, _>>()?;
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let row = pattern.row(i);
            for k in row.clone() {
                pos[pattern.col_indices()[k]] = k;
            }
            for k in row.clone() {
                let col = pattern.col_indices()[k];
                if col >= i {
                    break;
                }
                let pivot = lu.values()[diag[col]];
                if pivot == T::zero() {
                    return Err(SolverError::ZeroPivot { row: col });
                }
                let factor = lu.values()[k] / pivot;
                lu.values_mut()[k] = factor;
                for kk in (diag[col] + 1)..pattern.row(col).end {
                    let j = pattern.col_indices()[kk];
                    let p = pos[j];
                    if p != usize::MAX {
                        let sub = factor * lu.values()[kk];
                        lu.values_mut()[p] -= sub;
                    }
                }
            }
            for k in row {
                pos[pattern.col_indices()[k]] = usize::MAX;
            }
            if lu.values()[diag[i]] == T::zero() {
                return Err(SolverError::ZeroPivot { row: i });
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solves `L U z = r` in place.
    pub fn apply(&self, z: &mut [T]) {
        let pattern = self.lu.pattern();
        let vals = self.lu.values();
        let cols = pattern.col_indices();
        let n = z.len();
        for i in 0..n {
            let mut s = z[i];
            for k in pattern.row(i).start..self.diag[i] {
                s -= vals[k] * z[cols[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (self.diag[i] + 1)..pattern.row(i).end {
                s -= vals[k] * z[cols[k]];
            }
            z[i] = s / vals[self.diag[i]];
        }
    }
}

/// Solves `A x = b` from a zero initial guess.
pub fn solve<T: Scalar>(a: &CsrMatrix<T>, b: &[T], config: &SolverConfig) -> Result<(Vec<T>, SolveStats), SolverError> {
    if a.n_rows() != b.len() || a.n_cols() != b.len() {
        return Err(SolverError::Dimension { rows: a.n_rows(), cols: a.n_cols(), rhs: b.len() });
    }
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == T::zero() {
        return Ok((vec![T::zero(); n], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let tol = T::lit(config.rel_tol).max(T::epsilon() * T::lit(8.0));
    let precond = Ilu0::new(a)?;
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut total = 0;
    // restarts recover from breakdown and from drift between the recursive and true residual
    for _restart in 0..4 {
        total += bicgstab_cycle(a, &precond, &mut x, &mut r, b_norm * tol, config.max_iterations - total.min(config.max_iterations));
        a.matvec_into(&x, &mut r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rel = norm2(&r) / b_norm;
        if rel <= tol {
            return Ok((x, SolveStats { iterations: total, relative_residual: rel.to_f64_lossy() }));
        }
        if total >= config.max_iterations {
            break;
        }
    }
    Err(SolverError::NotConverged { iterations: total, relative_residual: (norm2(&r) / b_norm).to_f64_lossy() })
}

/// One BiCGSTAB cycle from the current `x` with residual `r`. Returns the
/// number of iterations performed; stops on convergence, breakdown or budget.
fn bicgstab_cycle<T: Scalar>(
    a: &CsrMatrix<T>,
    precond: &Ilu0<T>,
    x: &mut [T],
    r: &mut [T],
    abs_tol: T,
    budget: usize,
) -> usize {
    let n = x.len();
    let r_hat = r.to_vec();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    for it in 0..budget {
        if norm2(r) <= abs_tol {
            return it;
        }
        let rho_new = dot(&r_hat, r);
        if rho_new == T::zero() || omega == T::zero() {
            return it;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        y.copy_from_slice(&p);
        precond.apply(&mut y);
        a.matvec_into(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == T::zero() {
            return it;
        }
        alpha = rho / denom;
        axpy(alpha, &y, x);
        axpy(-alpha, &v, r);
        if norm2(r) <= abs_tol {
            return it + 1;
        }
        z.copy_from_slice(r);
        precond.apply(&mut z);
        a.matvec_into(&z, &mut t);
        let tt = dot(&t, &t);
        if tt == T::zero() {
            return it + 1;
        }
        omega = dot(&t, r) / tt;
        axpy(omega, &z, x);
        axpy(-omega, &t, r);
    }
    budget
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let d = DenseMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        CsrMatrix::from_dense(&d)
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        // no fill-in occurs, so ILU(0) is the exact LU
        let a = laplacian_1d(6);
        let ilu = Ilu0::new(&a).unwrap();
        let b = vec![1.0, 0.0, 2.0, -1.0, 0.5, 3.0];
        let mut z = b.clone();
        ilu.apply(&mut z);
        let back = a.matvec(&z);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn nonsymmetric_system() {
        let n = 50;
        let d = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if j == i + 1 {
                -1.5
            } else if i == j + 1 {
                -0.5
            } else if j == (i + 7) % n {
                0.3
            } else {
                0.0
            }
        });
        let a = CsrMatrix::from_dense(&d);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x_true);
        let (x, stats) = solve(&a, &b, &SolverConfig::default()).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_and_dimension_errors() {
        let a = laplacian_1d(3);
        let (x, stats) = solve(&a, &[0.0; 3], &SolverConfig::default()).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(stats.iterations, 0);
        assert!(matches!(solve(&a, &[1.0; 2], &SolverConfig::default()), Err(SolverError::Dimension { .. })));
    }
}
