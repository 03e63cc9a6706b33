//! Global stiffness, stabilised mass and projected mass matrices, boundary
//! handling by elimination, and element quadrature of projected basis functions.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::Point2;
use crate::linalg::{solve, CsrMatrix, SolveStats, SolverConfig, SolverError, SparsityPattern};
use crate::mesh::PolygonalMesh;
use crate::quadrature::polygon_quadrature;
use crate::scalar::Scalar;
use crate::vem_local::{build_operators, local_matrices, LocalOperators, VemError};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("cell {cell}")]
pub struct AssemblyError {
    pub cell: usize,
    #[source]
    pub source: VemError,
}

/// Global matrices over all vertex DOFs (boundary DOFs included).
#[derive(Clone, Debug)]
pub struct GlobalSystem<T> {
    /// `A`, from `a_h`
    pub stiffness: CsrMatrix<T>,
    /// `M`, from `m_h`
    pub mass: CsrMatrix<T>,
    /// `M̄`, `∫ Π⁰η_i Π⁰η_j`
    pub projected_mass: CsrMatrix<T>,
    pub n_dofs: usize,
    pub interior_dofs: Vec<usize>,
    pub boundary_dofs: Vec<usize>,
}

impl<T: Scalar> GlobalSystem<T> {
    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        self.stiffness.pattern()
    }
}

/// Global matrices together with the element operators they were built from.
#[derive(Clone, Debug)]
pub struct Discretization<T> {
    pub system: GlobalSystem<T>,
    pub operators: Vec<LocalOperators<T>>,
}

pub fn element_operators<T: Scalar>(mesh: &PolygonalMesh<T>) -> Result<Vec<LocalOperators<T>>, AssemblyError> {
    mesh.cells()
        .iter()
        .enumerate()
        .map(|(k, c)| build_operators(c, mesh.vertices()).map_err(|source| AssemblyError { cell: k, source }))
        .collect()
}

pub fn mesh_pattern<T: Scalar>(mesh: &PolygonalMesh<T>) -> Arc<SparsityPattern> {
    Arc::new(SparsityPattern::from_cliques(mesh.n_vertices(), mesh.cells().iter().map(|c| c.vertex_ids.as_slice())))
}

/// Scatter-adds the local matrices of `cells` (in the given order) on `pattern`.
pub fn assemble_cells<T: Scalar>(
    mesh: &PolygonalMesh<T>,
    operators: &[LocalOperators<T>],
    cells: impl IntoIterator<Item = usize>,
    pattern: &Arc<SparsityPattern>,
) -> [CsrMatrix<T>; 3] {
    let mut a = CsrMatrix::zeros(Arc::clone(pattern));
    let mut m = CsrMatrix::zeros(Arc::clone(pattern));
    let mut mbar = CsrMatrix::zeros(Arc::clone(pattern));
    for k in cells {
        let ids = &mesh.cells()[k].vertex_ids;
        let local = local_matrices(&operators[k]);
        a.add_local(ids, &local.stiffness);
        m.add_local(ids, &local.mass);
        mbar.add_local(ids, &local.projected_mass);
    }
    [a, m, mbar]
}

pub fn assemble_discretization<T: Scalar>(mesh: &PolygonalMesh<T>) -> Result<Discretization<T>, AssemblyError> {
    let operators = element_operators(mesh)?;
    let pattern = mesh_pattern(mesh);
    let [stiffness, mass, projected_mass] = assemble_cells(mesh, &operators, 0..mesh.n_cells(), &pattern);
    let system = GlobalSystem {
        stiffness,
        mass,
        projected_mass,
        n_dofs: mesh.n_vertices(),
        interior_dofs: mesh.interior_vertices(),
        boundary_dofs: mesh.boundary_vertices(),
    };
    Ok(Discretization { system, operators })
}

pub fn assemble<T: Scalar>(mesh: &PolygonalMesh<T>) -> Result<GlobalSystem<T>, AssemblyError> {
    Ok(assemble_discretization(mesh)?.system)
}

/// Vertex interpolant `I_h f`.
pub fn interpolate<T: Scalar>(func: impl Fn(T, T) -> T, mesh: &PolygonalMesh<T>) -> Vec<T> {
    mesh.vertices().iter().map(|p| func(p.x, p.y)).collect()
}

pub type SpaceTimeFn<T> = Arc<dyn Fn(T, T, T) -> T + Send + Sync>;

/// Boundary condition on the whole perimeter.
#[derive(Clone)]
pub enum BoundaryData<T> {
    /// `u(x, y, t) = trace(x, y, t)` on the boundary.
    Dirichlet(SpaceTimeFn<T>),
    /// Natural condition `∂u/∂n = 0`; nothing to impose.
    NeumannHomogeneous,
}

impl<T: Scalar> BoundaryData<T> {
    pub fn dirichlet(trace: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        Self::Dirichlet(Arc::new(trace))
    }

    pub fn homogeneous_dirichlet() -> Self {
        Self::dirichlet(|_, _, _| T::zero())
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Dirichlet(_))
    }

    /// Fixed DOFs and their values at time `t`.
    pub fn fixed_values(&self, mesh: &PolygonalMesh<T>, split: &DofSplit, t: T) -> Vec<T> {
        match self {
            Self::Dirichlet(trace) => split
                .fixed
                .iter()
                .map(|&i| {
                    let p = mesh.vertices()[i];
                    trace(p.x, p.y, t)
                })
                .collect(),
            Self::NeumannHomogeneous => Vec::new(),
        }
    }
}

impl<T> fmt::Debug for BoundaryData<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dirichlet(_) => f.write_str("Dirichlet(..)"),
            Self::NeumannHomogeneous => f.write_str("NeumannHomogeneous"),
        }
    }
}

/// Partition of the DOFs into unknowns and eliminated (pinned) values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofSplit {
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    to_free: Vec<Option<usize>>,
}

impl DofSplit {
    pub fn new<T: Scalar>(mesh: &PolygonalMesh<T>, boundary: &BoundaryData<T>) -> Self {
        let n = mesh.n_vertices();
        if boundary.is_dirichlet() {
            let free = mesh.interior_vertices();
            let mut to_free = vec![None; n];
            for (k, &i) in free.iter().enumerate() {
                to_free[i] = Some(k);
            }
            Self { free, fixed: mesh.boundary_vertices(), to_free }
        } else {
            Self { free: (0..n).collect(), fixed: Vec::new(), to_free: (0..n).map(Some).collect() }
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn restrict<T: Copy>(&self, full: &[T]) -> Vec<T> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    pub fn scatter_free<T: Copy>(&self, values: &[T], full: &mut [T]) {
        for (&i, &v) in self.free.iter().zip(values) {
            full[i] = v;
        }
    }

    pub fn scatter_fixed<T: Copy>(&self, values: &[T], full: &mut [T]) {
        for (&i, &v) in self.fixed.iter().zip(values) {
            full[i] = v;
        }
    }

    /// Free-by-free block of a global matrix.
    pub fn reduce_matrix<T: Scalar>(&self, matrix: &CsrMatrix<T>) -> CsrMatrix<T> {
        if self.fixed.is_empty() {
            return matrix.clone();
        }
        matrix.submatrix(&self.free, &self.to_free, self.free.len())
    }
}

/// Interior operator after eliminating Dirichlet DOFs.
#[derive(Clone, Debug)]
pub struct ReducedOperator<T> {
    pub split: DofSplit,
    /// `A_II`
    pub matrix: CsrMatrix<T>,
    /// `−A_IB g_B`
    pub lift: Vec<T>,
    pub fixed_values: Vec<T>,
}

impl<T: Scalar> ReducedOperator<T> {
    /// Full vector from free values and the pinned boundary values.
    pub fn expand(&self, free_values: &[T]) -> Vec<T> {
        let mut full = vec![T::zero(); self.split.free.len() + self.split.fixed.len()];
        self.split.scatter_free(free_values, &mut full);
        self.split.scatter_fixed(&self.fixed_values, &mut full);
        full
    }

    /// Solves `A_II u_I = rhs_I + lift` and returns the full vector.
    pub fn solve(&self, rhs_free: &[T], config: &SolverConfig) -> Result<(Vec<T>, SolveStats), SolverError> {
        let b: Vec<T> = rhs_free.iter().zip(&self.lift).map(|(&r, &l)| r + l).collect();
        let (u, stats) = solve(&self.matrix, &b, config)?;
        Ok((self.expand(&u), stats))
    }
}

/// Eliminates boundary DOFs of `matrix` with the trace at time `t`.
/// Homogeneous Neumann data leaves the operator unchanged.
pub fn apply_dirichlet<T: Scalar>(
    matrix: &CsrMatrix<T>,
    mesh: &PolygonalMesh<T>,
    boundary: &BoundaryData<T>,
    t: T,
) -> ReducedOperator<T> {
    let split = DofSplit::new(mesh, boundary);
    let fixed_values = boundary.fixed_values(mesh, &split, t);
    let mut g = vec![T::zero(); mesh.n_vertices()];
    split.scatter_fixed(&fixed_values, &mut g);
    let ag = matrix.matvec(&g);
    let lift = split.free.iter().map(|&i| -ag[i]).collect();
    ReducedOperator { matrix: split.reduce_matrix(matrix), lift, split, fixed_values }
}

/// Per-element quadrature points with the values of the projected basis
/// functions `Π⁰η_i` there; used to load source terms and the
/// quadrature-based nonlinear treatment.
#[derive(Clone, Debug)]
pub struct ProjectedBasisTable<T> {
    cells: Vec<CellTable<T>>,
    n_dofs: usize,
    degree: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct CellTable<T> {
    pub dofs: Vec<usize>,
    pub points: Vec<Point2<T>>,
    pub weights: Vec<T>,
    /// `values[q * n + i] = Π⁰η_i(points[q])`
    pub values: Vec<T>,
}

impl<T: Scalar> ProjectedBasisTable<T> {
    pub fn new(mesh: &PolygonalMesh<T>, operators: &[LocalOperators<T>], degree: usize) -> Result<Self, AssemblyError> {
        let mut cells = Vec::with_capacity(mesh.n_cells());
        for (k, (cell, ops)) in mesh.cells().iter().zip(operators).enumerate() {
            let poly = mesh.cell_points(k);
            let rule = polygon_quadrature(&poly, degree).map_err(|e| AssemblyError { cell: k, source: e.into() })?;
            let mut table = CellTable {
                dofs: cell.vertex_ids.clone(),
                points: Vec::with_capacity(rule.len()),
                weights: Vec::with_capacity(rule.len()),
                values: Vec::with_capacity(rule.len() * cell.n_vertices()),
            };
            for (p, w) in rule {
                table.points.push(p);
                table.weights.push(w);
                table.values.extend(ops.projected_basis_at(p));
            }
            cells.push(table);
        }
        Ok(Self { cells, n_dofs: mesh.n_vertices(), degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub(crate) fn cells(&self) -> &[CellTable<T>] {
        &self.cells
    }

    /// `F_i = Σ_K ∫_K f Π⁰η_i`
    pub fn load(&self, f: impl Fn(Point2<T>) -> T) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_dofs];
        for c in &self.cells {
            let n = c.dofs.len();
            for (q, (&p, &w)) in c.points.iter().zip(&c.weights).enumerate() {
                let fw = f(p) * w;
                for (a, &i) in c.dofs.iter().enumerate() {
                    out[i] += fw * c.values[q * n + a];
                }
            }
        }
        out
    }
}
