//! Relative discrete errors against the vertex interpolant of the exact
//! solution, and observed convergence rates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::GlobalSystem;
use crate::linalg::CsrMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("reference has zero norm")]
    ZeroDenominator,
    #[error("vector lengths differ: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("need at least two records, got {0}")]
    TooFewRecords(usize),
    #[error("refinement parameter must strictly decrease (row {row})")]
    NonMonotone { row: usize },
    #[error("errors must be positive and finite (row {row})")]
    BadError { row: usize },
}

fn relative<T: Scalar>(matrix: &CsrMatrix<T>, exact: &[T], approx: &[T]) -> Result<T, NormError> {
    if exact.len() != approx.len() || exact.len() != matrix.n_rows() {
        return Err(NormError::Dimension(exact.len(), approx.len()));
    }
    let e: Vec<T> = exact.iter().zip(approx).map(|(&a, &b)| a - b).collect();
    let den = matrix.bilinear(exact, exact);
    // zero up to rounding, measured against |A|·|x|·|x|
    let scale: T = (0..matrix.n_rows())
        .map(|i| {
            let row = matrix.pattern().row(i);
            let cols = &matrix.pattern().col_indices()[row.clone()];
            cols.iter().zip(&matrix.values()[row]).map(|(&j, &a)| (a * exact[i] * exact[j]).abs()).sum::<T>()
        })
        .sum();
    if !(den > T::epsilon() * T::lit(1e3) * scale) {
        return Err(NormError::ZeroDenominator);
    }
    Ok((matrix.bilinear(&e, &e).max(T::zero()) / den).sqrt())
}

/// `√(eᵀMe / (I_h u)ᵀM(I_h u))` with `e = I_h u − u_h`.
pub fn relative_l2<T: Scalar>(system: &GlobalSystem<T>, exact_interp: &[T], u_h: &[T]) -> Result<T, NormError> {
    relative(&system.mass, exact_interp, u_h)
}

/// `√(eᵀAe / (I_h u)ᵀA(I_h u))`
pub fn relative_h1<T: Scalar>(system: &GlobalSystem<T>, exact_interp: &[T], u_h: &[T]) -> Result<T, NormError> {
    relative(&system.stiffness, exact_interp, u_h)
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub h: f64,
    pub dt: f64,
    pub dofs: usize,
    pub l2_error: f64,
    pub h1_error: f64,
    pub rate_l2: Option<f64>,
    pub rate_h1: Option<f64>,
    pub newton_total: usize,
    pub wall_seconds: f64,
}

/// Which parameter a sequence is refined in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementParameter {
    MeshSize,
    TimeStep,
}

impl RefinementParameter {
    fn of(self, r: &ConvergenceRecord) -> f64 {
        match self {
            Self::MeshSize => r.h,
            Self::TimeStep => r.dt,
        }
    }
}

/// `log(e₁/e₂) / log(m₁/m₂)`
pub fn rate(e1: f64, e2: f64, m1: f64, m2: f64) -> f64 {
    if e1 == e2 {
        return 0.0;
    }
    (e1 / e2).ln() / (m1 / m2).ln()
}

/// Least-squares slope of `log e` against `log m`.
pub fn fitted_rate(params: &[f64], errors: &[f64]) -> Result<f64, NormError> {
    if params.len() != errors.len() {
        return Err(NormError::Dimension(params.len(), errors.len()));
    }
    let n = params.len();
    if n < 2 {
        return Err(NormError::TooFewRecords(n));
    }
    for (row, (&m, &e)) in params.iter().zip(errors).enumerate() {
        if !(e > 0.0 && e.is_finite()) || !(m > 0.0 && m.is_finite()) {
            return Err(NormError::BadError { row });
        }
    }
    let xs: Vec<f64> = params.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(NormError::NonMonotone { row: 1 });
    }
    Ok(sxy / sxx)
}

fn check_sequence(records: &[ConvergenceRecord], by: RefinementParameter) -> Result<(), NormError> {
    if records.len() < 2 {
        return Err(NormError::TooFewRecords(records.len()));
    }
    for (row, w) in records.windows(2).enumerate() {
        if !(by.of(&w[1]) < by.of(&w[0])) || !(by.of(&w[1]) > 0.0) {
            return Err(NormError::NonMonotone { row: row + 1 });
        }
    }
    Ok(())
}

/// Fills the rate columns from the second row on; the first row gets `None`.
pub fn rates(records: &mut [ConvergenceRecord], by: RefinementParameter) -> Result<(), NormError> {
    check_sequence(records, by)?;
    records[0].rate_l2 = None;
    records[0].rate_h1 = None;
    for i in 1..records.len() {
        let (m1, m2) = (by.of(&records[i - 1]), by.of(&records[i]));
        let rl2 = rate(records[i - 1].l2_error, records[i].l2_error, m1, m2);
        let rh1 = rate(records[i - 1].h1_error, records[i].h1_error, m1, m2);
        records[i].rate_l2 = Some(rl2);
        records[i].rate_h1 = Some(rh1);
    }
    Ok(())
}

/// Fitted `(L2, H1)` rates over the whole sequence.
pub fn fitted_rates(records: &[ConvergenceRecord], by: RefinementParameter) -> Result<(f64, f64), NormError> {
    check_sequence(records, by)?;
    let m: Vec<f64> = records.iter().map(|r| by.of(r)).collect();
    let l2: Vec<f64> = records.iter().map(|r| r.l2_error).collect();
    let h1: Vec<f64> = records.iter().map(|r| r.h1_error).collect();
    Ok((fitted_rate(&m, &l2)?, fitted_rate(&m, &h1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, interpolate};
    use crate::geometry::Rect;
    use crate::mesh::generate_voronoi;

    fn record(m: f64, e: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            h: m,
            dt: m,
            dofs: 0,
            l2_error: e,
            h1_error: e,
            rate_l2: None,
            rate_h1: None,
            newton_total: 0,
            wall_seconds: 0.0,
        }
    }

    #[test]
    fn norm_basics() {
        let mesh = generate_voronoi::<f64>(Rect::unit(), 50, 5, 1).unwrap();
        let sys = assemble(&mesh).unwrap();
        let u = interpolate(|x, y| (3.0 * x).sin() + y * y, &mesh);
        assert_eq!(relative_l2(&sys, &u, &u).unwrap(), 0.0);
        assert_eq!(relative_h1(&sys, &u, &u).unwrap(), 0.0);
        let v: Vec<f64> = u.iter().enumerate().map(|(i, x)| x + 0.01 * (i as f64).cos()).collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - 2.0 * (a - b)).collect();
        let (e1, e2) = (relative_l2(&sys, &u, &v).unwrap(), relative_l2(&sys, &u, &w).unwrap());
        assert!((e2 - 2.0 * e1).abs() < 1e-14);
        // constant error: invisible to H1, visible to L2
        let shifted: Vec<f64> = u.iter().map(|x| x + 0.5).collect();
        assert!(relative_h1(&sys, &u, &shifted).unwrap() < 1e-12);
        assert!(relative_l2(&sys, &u, &shifted).unwrap() > 0.1);
        let c = vec![2.0; u.len()];
        assert_eq!(relative_h1(&sys, &c, &u), Err(NormError::ZeroDenominator));
        assert_eq!(relative_l2(&sys, &vec![0.0; u.len()], &u), Err(NormError::ZeroDenominator));
        assert!(matches!(relative_l2(&sys, &u, &u[1..]), Err(NormError::Dimension(..))));
    }

    #[test]
    fn norms_are_invariant_under_domain_scaling() {
        let small = generate_voronoi::<f64>(Rect::unit(), 40, 3, 8).unwrap();
        let big = generate_voronoi::<f64>(Rect::from_f64(0.0, 3.0, 0.0, 3.0), 40, 3, 8).unwrap();
        let (s, b) = (assemble(&small).unwrap(), assemble(&big).unwrap());
        let ue: Vec<f64> = (0..small.n_vertices()).map(|i| (i as f64 * 0.3).sin() + 2.0).collect();
        let uh: Vec<f64> = ue.iter().enumerate().map(|(i, v)| v + 0.01 * (i as f64).cos()).collect();
        assert_eq!(small.n_vertices(), big.n_vertices());
        assert!((relative_l2(&s, &ue, &uh).unwrap() - relative_l2(&b, &ue, &uh).unwrap()).abs() < 1e-10);
        assert!((relative_h1(&s, &ue, &uh).unwrap() - relative_h1(&b, &ue, &uh).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn rate_formula() {
        assert!((rate(4e-4, 1e-4, 0.1, 0.05) - 2.0).abs() < 1e-12);
        assert_eq!(rate(1e-3, 1e-3, 0.1, 0.05), 0.0);
        let mut rows = vec![record(0.2, 4.8610e-4), record(0.1, 1.4540e-4), record(0.05, 3.6105e-5), record(0.025, 9.1523e-6)];
        rates(&mut rows, RefinementParameter::TimeStep).unwrap();
        assert_eq!(rows[0].rate_l2, None);
        let r: Vec<f64> = rows[1..].iter().map(|r| r.rate_l2.unwrap()).collect();
        for (got, want) in r.iter().zip([1.74, 2.00, 1.98]) {
            assert!((got - want).abs() <= 0.01, "{got} vs {want}");
        }
    }

    #[test]
    fn rate_errors() {
        let mut one = vec![record(0.1, 1.0)];
        assert_eq!(rates(&mut one, RefinementParameter::MeshSize), Err(NormError::TooFewRecords(1)));
        let mut bad = vec![record(0.1, 1.0), record(0.2, 0.5)];
        assert_eq!(rates(&mut bad, RefinementParameter::MeshSize), Err(NormError::NonMonotone { row: 1 }));
        assert!(fitted_rate(&[0.1, 0.05], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn fitted_rate_recovers_power_law() {
        let m = [0.4, 0.2, 0.13, 0.05];
        let e: Vec<f64> = m.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((fitted_rate(&m, &e).unwrap() - 1.7).abs() < 1e-12);
    }
}
