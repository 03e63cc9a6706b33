//! Element-level operators of the lowest-order virtual element space.
//!
//! Degrees of freedom are vertex values. Polynomials are expressed in the
//! scaled monomials `m₁ = 1`, `m₂ = (x − x_K)/h_K`, `m₃ = (y − y_K)/h_K`.
//! With `D` (monomials at vertices) and `B` (right-hand sides of the elliptic
//! projection, first row replaced by the boundary-average constraint),
//! `G = B D`, `Π∇* = G⁻¹ B` gives the projection in monomial coefficients and
//! `Π∇ = D Π∇*` in vertex values. On the enhanced space the L² projection onto
//! linears coincides with `Π∇`, so one matrix serves both.

use thiserror::Error;

use crate::geometry::Point2;
use crate::linalg::DenseMatrix;
use crate::mesh::PolygonCell;
use crate::quadrature::{polygon_quadrature, QuadratureError};
use crate::scalar::Scalar;

pub const N_MONOMIALS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VemError {
    #[error("projector matrix G is singular (degenerate cell)")]
    SingularProjector,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `{1, (x − x_K)/h_K, (y − y_K)/h_K}`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMonomialBasis<T> {
    pub centroid: Point2<T>,
    pub diameter: T,
}

impl<T: Scalar> ScaledMonomialBasis<T> {
    pub fn new(centroid: Point2<T>, diameter: T) -> Self {
        debug_assert!(diameter > T::zero());
        Self { centroid, diameter }
    }

    #[inline]
    pub fn eval(&self, p: Point2<T>) -> [T; N_MONOMIALS] {
        let s = (p - self.centroid) * (T::one() / self.diameter);
        [T::one(), s.x, s.y]
    }

    /// Constant gradients of the three monomials.
    pub fn gradients(&self) -> [Point2<T>; N_MONOMIALS] {
        let inv = T::one() / self.diameter;
        [Point2::default(), Point2::new(inv, T::zero()), Point2::new(T::zero(), inv)]
    }
}

/// Projector matrices of one polygon with `N` vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperators<T> {
    pub basis: ScaledMonomialBasis<T>,
    pub area: T,
    /// `N × 3`, `D[i][α] = m_α(V_i)`
    pub d: DenseMatrix<T>,
    /// `3 × N`
    pub b: DenseMatrix<T>,
    /// `3 × 3`, `B · D`
    pub g: DenseMatrix<T>,
    /// `G` with the constraint row zeroed: `a^K(m_α, m_β)`
    pub g_tilde: DenseMatrix<T>,
    /// `3 × 3`, `∫_K m_α m_β`
    pub h: DenseMatrix<T>,
    /// `3 × N`, monomial coefficients of the projection of each basis function
    pub pi_star: DenseMatrix<T>,
    /// `N × N`, vertex values of the projection of each basis function
    pub pi_dof: DenseMatrix<T>,
}

/// Stiffness, stabilised mass and projected (consistency-only) mass of one element.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMatrices<T> {
    pub stiffness: DenseMatrix<T>,
    pub mass: DenseMatrix<T>,
    pub projected_mass: DenseMatrix<T>,
}

impl<T: Scalar> LocalOperators<T> {
    pub fn n_dofs(&self) -> usize {
        self.d.nrows()
    }

    /// Values of the projected basis functions `Π⁰η_i` at `p`.
    pub fn projected_basis_at(&self, p: Point2<T>) -> Vec<T> {
        let m = self.basis.eval(p);
        (0..self.n_dofs())
            .map(|i| (0..N_MONOMIALS).map(|a| self.pi_star[(a, i)] * m[a]).sum())
            .collect()
    }

    /// `I − Π∇` in vertex values.
    pub fn complement(&self) -> DenseMatrix<T> {
        DenseMatrix::identity(self.n_dofs()).sub(&self.pi_dof)
    }
}

/// Builds `D`, `B`, `G`, `H` and the projectors for `cell`.
pub fn build_operators<T: Scalar>(cell: &PolygonCell<T>, vertices: &[Point2<T>]) -> Result<LocalOperators<T>, VemError> {
    let poly: Vec<Point2<T>> = cell.vertex_ids.iter().map(|&i| vertices[i]).collect();
    build_operators_for_polygon(&poly, cell.area, cell.centroid, cell.diameter)
}

pub fn build_operators_for_polygon<T: Scalar>(
    poly: &[Point2<T>],
    area: T,
    centroid: Point2<T>,
    diameter: T,
) -> Result<LocalOperators<T>, VemError> {
    let n = poly.len();
    let basis = ScaledMonomialBasis::new(centroid, diameter);
    let d = DenseMatrix::from_fn(n, N_MONOMIALS, |i, a| basis.eval(poly[i])[a]);

    let edge_len: Vec<T> = (0..n).map(|i| poly[i].distance(poly[(i + 1) % n])).collect();
    let perimeter: T = edge_len.iter().copied().sum();
    // Outward normal of a CCW edge (dx, dy) is (dy, -dx)/|e|; scaled by |e| it is (dy, -dx).
    let scaled_normal: Vec<Point2<T>> = (0..n)
        .map(|i| {
            let e = poly[(i + 1) % n] - poly[i];
            Point2::new(e.y, -e.x)
        })
        .collect();
    let grads = basis.gradients();
    let half = T::lit(0.5);
    let mut b = DenseMatrix::zeros(N_MONOMIALS, n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        b[(0, i)] = (edge_len[prev] + edge_len[i]) * half / perimeter;
        // each adjacent edge contributes |e|/2 (∇m·n_e) for the linear hat trace
        let nsum = scaled_normal[prev] + scaled_normal[i];
        for a in 1..N_MONOMIALS {
            b[(a, i)] = grads[a].dot(nsum) * half;
        }
    }

    let g = b.matmul(&d);
    let g_inv = g.inverse(T::epsilon() * T::lit(1e3)).ok_or(VemError::SingularProjector)?;
    let mut g_tilde = g.clone();
    for j in 0..N_MONOMIALS {
        g_tilde[(0, j)] = T::zero();
    }
    let pi_star = g_inv.matmul(&b);
    let pi_dof = d.matmul(&pi_star);

    let mut h = DenseMatrix::zeros(N_MONOMIALS, N_MONOMIALS);
    for (p, w) in polygon_quadrature(poly, 2)? {
        let m = basis.eval(p);
        for a in 0..N_MONOMIALS {
            for c in 0..N_MONOMIALS {
                h[(a, c)] += w * m[a] * m[c];
            }
        }
    }

    Ok(LocalOperators { basis, area, d, b, g, g_tilde, h: h.symmetrized(), pi_star, pi_dof })
}

/// `K_E = Π*ᵀ G̃ Π* + (I − Π)ᵀ(I − Π)`
pub fn local_stiffness<T: Scalar>(ops: &LocalOperators<T>) -> DenseMatrix<T> {
    let consistency = ops.pi_star.congruence(&ops.g_tilde);
    let c = ops.complement();
    consistency.add(&c.transpose().matmul(&c)).symmetrized()
}

/// `M̄_E = Π*ᵀ H Π*`
pub fn local_projected_mass<T: Scalar>(ops: &LocalOperators<T>) -> DenseMatrix<T> {
    ops.pi_star.congruence(&ops.h).symmetrized()
}

/// `M_E = M̄_E + |K| (I − Π)ᵀ(I − Π)`
pub fn local_mass<T: Scalar>(ops: &LocalOperators<T>) -> DenseMatrix<T> {
    let c = ops.complement();
    local_projected_mass(ops).add(&c.transpose().matmul(&c).scaled(ops.area)).symmetrized()
}

pub fn local_matrices<T: Scalar>(ops: &LocalOperators<T>) -> LocalMatrices<T> {
    LocalMatrices { stiffness: local_stiffness(ops), mass: local_mass(ops), projected_mass: local_projected_mass(ops) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::cell_geometry;

    fn ops_for(coords: &[(f64, f64)]) -> LocalOperators<f64> {
        let poly: Vec<Point2<f64>> = coords.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let ids: Vec<usize> = (0..poly.len()).collect();
        let g = cell_geometry(&poly, &ids).unwrap();
        build_operators_for_polygon(&poly, g.area, g.centroid, g.diameter).unwrap()
    }

    const UNIT_SQUARE: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    const PENTAGON: [(f64, f64); 5] = [(0.0, 0.0), (2.0, 0.1), (2.4, 1.3), (1.0, 2.2), (-0.3, 1.1)];
    const L_SHAPE: [(f64, f64); 6] = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)];

    #[test]
    fn monomials_at_centroid_and_vertex() {
        let ops = ops_for(&UNIT_SQUARE);
        assert_eq!(ops.basis.eval(Point2::new(0.5, 0.5)), [1.0, 0.0, 0.0]);
        let m = ops.basis.eval(Point2::new(1.0, 0.5));
        assert!((m[1] - 0.5 / 2f64.sqrt()).abs() < 1e-15 && m[2] == 0.0);
        assert_eq!(ops.basis.gradients()[1], Point2::new(1.0 / 2f64.sqrt(), 0.0));
    }

    #[test]
    fn unit_square_g_is_diagonal() {
        // G = diag(1, |K|/h², |K|/h²) with h = sqrt(2)
        let ops = ops_for(&UNIT_SQUARE);
        let expected = DenseMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (1, 1) | (2, 2) => 0.5,
            _ => 0.0,
        });
        assert!(ops.g.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn projector_properties() {
        for coords in [&UNIT_SQUARE[..], &PENTAGON[..], &L_SHAPE[..]] {
            let ops = ops_for(coords);
            assert!(ops.g.sub(&ops.b.matmul(&ops.d)).max_abs() < 1e-12);
            assert!(ops.pi_dof.matmul(&ops.pi_dof).sub(&ops.pi_dof).max_abs() < 1e-10);
            assert!(ops.pi_dof.matmul(&ops.d).sub(&ops.d).max_abs() < 1e-10);
            for a in 1..3 {
                let row_sum: f64 = ops.b.row(a).iter().sum();
                assert!(row_sum.abs() < 1e-14);
            }
            // the dofs of p(x, y) = x are reproduced
            let x_dofs: Vec<f64> = coords.iter().map(|c| c.0).collect();
            let back = ops.pi_dof.matvec(&x_dofs);
            for (u, v) in back.iter().zip(&x_dofs) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_consistency() {
        for coords in [&UNIT_SQUARE[..], &PENTAGON[..], &L_SHAPE[..]] {
            let ops = ops_for(coords);
            let k = local_stiffness(&ops);
            let ones = vec![1.0; coords.len()];
            assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
            // a^K(x, η_i) = ∫_{∂K} n_x η_i = h_K · B[1][i]
            let x_dofs: Vec<f64> = coords.iter().map(|c| c.0).collect();
            let kx = k.matvec(&x_dofs);
            for (i, v) in kx.iter().enumerate() {
                assert!((v - ops.basis.diameter * ops.b[(1, i)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mass_consistency_reproduces_h() {
        for coords in [&UNIT_SQUARE[..], &PENTAGON[..], &L_SHAPE[..]] {
            let ops = ops_for(coords);
            let m = local_mass(&ops);
            let mbar = local_projected_mass(&ops);
            assert!(ops.d.congruence(&m).sub(&ops.h).max_abs() < 1e-10);
            assert!(ops.d.congruence(&mbar).sub(&ops.h).max_abs() < 1e-10);
            assert!((m.sum() - ops.area).abs() < 1e-10 * ops.area);
            assert!((mbar.sum() - ops.area).abs() < 1e-10 * ops.area);
        }
    }

    #[test]
    fn translation_invariance() {
        let shifted: Vec<(f64, f64)> = PENTAGON.iter().map(|&(x, y)| (x + 13.25, y - 7.5)).collect();
        let (a, b) = (ops_for(&PENTAGON), ops_for(&shifted));
        let (ma, mb) = (local_matrices(&a), local_matrices(&b));
        assert!(ma.stiffness.sub(&mb.stiffness).max_abs() < 1e-12);
        assert!(ma.mass.sub(&mb.mass).max_abs() < 1e-12);
    }

    #[test]
    fn degenerate_polygon_is_rejected() {
        let poly = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        let err = build_operators_for_polygon(&poly, 0.0, Point2::new(1.0, 0.0), 2.0).unwrap_err();
        assert_eq!(err, VemError::SingularProjector);
    }
}
