//! Nonlinear load terms, the per-step residual and Jacobian, and Newton's method.
//!
//! Two treatments of `∫ f(u_h) v_h` are available: the product approximation
//! `M̄ · f(u)` (vertex values of `f(u_h)` pushed through the projected mass
//! matrix) and direct element quadrature of `f(Π⁰u_h) Π⁰η_i`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::assembly::{GlobalSystem, ProjectedBasisTable};
use crate::linalg::{solve, CsrMatrix, SolverConfig, SolverError, SparsityPattern};
use crate::scalar::{norm2, Scalar};

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Right-hand side nonlinearity `f(u)` with its derivative.
#[derive(Clone)]
pub struct Nonlinearity<T> {
    name: String,
    f: ScalarFn<T>,
    f_prime: ScalarFn<T>,
}

impl<T: Scalar> Nonlinearity<T> {
    /// `f(u) = −sin u`
    pub fn sine_gordon() -> Self {
        Self::custom("sine_gordon", |u: T| -u.sin(), |u: T| -u.cos())
    }

    /// `f(u) = u²`
    pub fn quadratic() -> Self {
        Self::custom("quadratic", |u: T| u * u, |u: T| u + u)
    }

    /// `f(u) = c·u`
    pub fn linear(c: T) -> Self {
        Self::custom("linear", move |u: T| c * u, move |_| c)
    }

    pub fn zero() -> Self {
        Self::custom("zero", |_| T::zero(), |_| T::zero())
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        f_prime: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), f: Arc::new(f), f_prime: Arc::new(f_prime) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn f(&self, u: T) -> T {
        (self.f)(u)
    }

    #[inline]
    pub fn f_prime(&self, u: T) -> T {
        (self.f_prime)(u)
    }

    pub fn apply(&self, u: &[T]) -> Vec<T> {
        u.iter().map(|&v| self.f(v)).collect()
    }

    pub fn apply_prime(&self, u: &[T]) -> Vec<T> {
        u.iter().map(|&v| self.f_prime(v)).collect()
    }

    /// Central-difference check of `f_prime` at `samples`; returns the worst
    /// sample whose relative mismatch exceeds `tol`.
    pub fn check_derivative(&self, samples: &[T], tol: T) -> Result<(), T> {
        for &u in samples {
            let eps = T::epsilon().cbrt() * (T::one() + u.abs());
            let fd = (self.f(u + eps) - self.f(u - eps)) / (eps + eps);
            let exact = self.f_prime(u);
            if (fd - exact).abs() > tol * (T::one() + exact.abs()) {
                return Err(u);
            }
        }
        Ok(())
    }
}

impl<T> fmt::Debug for Nonlinearity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on `‖R‖₂`.
    pub tol_residual: f64,
    pub max_iterations: usize,
    /// Relative tolerance of each linear solve.
    pub linear_solver_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol_residual: 1e-10, max_iterations: 25, linear_solver_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// `‖R‖₂` before the first and after every iteration.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum NonlinearError {
    #[error("Newton did not converge in {} iterations (residual {:e})", .0.iterations, .0.final_residual_norm)]
    NotConverged(NewtonReport),
    #[error("linear solve failed in Newton iteration {iteration}")]
    LinearSolver {
        iteration: usize,
        #[source]
        source: SolverError,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How `∫ f(u_h) η_i` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NonlinearTreatment {
    #[default]
    ProductApprox,
    /// Element quadrature of `f(Π⁰u_h) Π⁰η_i` with a rule of the given degree.
    Quadrature { degree: usize },
}

impl NonlinearTreatment {
    pub const DEFAULT_QUADRATURE_DEGREE: usize = 4;

    pub fn quadrature() -> Self {
        Self::Quadrature { degree: Self::DEFAULT_QUADRATURE_DEGREE }
    }
}

/// `M̄ · f(u)`
pub fn product_approx_load<T: Scalar>(projected_mass: &CsrMatrix<T>, u: &[T], f: &Nonlinearity<T>) -> Vec<T> {
    projected_mass.matvec(&f.apply(u))
}

/// `F_i = Σ_K ∫_K f(Σ_j u_j Π⁰η_j) Π⁰η_i`
pub fn quadrature_load<T: Scalar>(table: &ProjectedBasisTable<T>, u: &[T], f: &Nonlinearity<T>) -> Vec<T> {
    let mut out = vec![T::zero(); table.n_dofs()];
    for c in table.cells() {
        let n = c.dofs.len();
        for (q, &w) in c.weights.iter().enumerate() {
            let phi = &c.values[q * n..(q + 1) * n];
            let uq: T = phi.iter().zip(&c.dofs).map(|(&p, &j)| p * u[j]).sum();
            let fw = f.f(uq) * w;
            for (&p, &i) in phi.iter().zip(&c.dofs) {
                out[i] += fw * p;
            }
        }
    }
    out
}

/// `D_ij = Σ_K ∫_K f′(Π⁰u_h) Π⁰η_j Π⁰η_i` on `pattern`.
pub fn quadrature_load_derivative<T: Scalar>(
    table: &ProjectedBasisTable<T>,
    pattern: &Arc<SparsityPattern>,
    u: &[T],
    f: &Nonlinearity<T>,
) -> CsrMatrix<T> {
    let mut out = CsrMatrix::zeros(Arc::clone(pattern));
    let mut slots = Vec::new();
    for c in table.cells() {
        let n = c.dofs.len();
        slots.clear();
        for &i in &c.dofs {
            for &j in &c.dofs {
                slots.push(pattern.find(i, j).expect("cell pair in pattern"));
            }
        }
        for (q, &w) in c.weights.iter().enumerate() {
            let phi = &c.values[q * n..(q + 1) * n];
            let uq: T = phi.iter().zip(&c.dofs).map(|(&p, &j)| p * u[j]).sum();
            let dw = f.f_prime(uq) * w;
            let vals = out.values_mut();
            for a in 0..n {
                let da = dw * phi[a];
                for b in 0..n {
                    vals[slots[a * n + b]] += da * phi[b];
                }
            }
        }
    }
    out
}

/// The time-step coefficients entering the residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCoefficients<T> {
    pub gamma: T,
    pub dt: T,
    pub theta: T,
}

impl<T: Scalar> StepCoefficients<T> {
    pub fn validate(&self) -> Result<(), NonlinearError> {
        if !(self.gamma >= T::zero()) || !self.gamma.is_finite() {
            return Err(NonlinearError::InvalidParameter(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(NonlinearError::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.theta >= T::zero() && self.theta <= T::one()) {
            return Err(NonlinearError::InvalidParameter(format!("theta = {} not in [0, 1]", self.theta)));
        }
        Ok(())
    }

    fn dt2(&self) -> T {
        self.dt * self.dt
    }

    /// `(1 + γΔt/2) M + θΔt² A`
    pub fn base_matrix(&self, system: &GlobalSystem<T>) -> CsrMatrix<T> {
        let half = T::lit(0.5);
        system.mass.combine(T::one() + half * self.gamma * self.dt, &system.stiffness, self.theta * self.dt2())
    }

    /// `(1 − γΔt/2) M + (1 − θ)Δt² A`
    pub fn previous_matrix(&self, system: &GlobalSystem<T>) -> CsrMatrix<T> {
        let half = T::lit(0.5);
        system.mass.combine(T::one() - half * self.gamma * self.dt, &system.stiffness, (T::one() - self.theta) * self.dt2())
    }
}

/// Evaluates the nonlinear load and its derivative for one treatment.
#[derive(Clone, Copy, Debug)]
pub enum LoadOperator<'a, T> {
    Product(&'a CsrMatrix<T>),
    Quadrature(&'a ProjectedBasisTable<T>),
}

impl<T: Scalar> LoadOperator<'_, T> {
    pub fn load(&self, u: &[T], f: &Nonlinearity<T>) -> Vec<T> {
        match self {
            Self::Product(mbar) => product_approx_load(mbar, u, f),
            Self::Quadrature(table) => quadrature_load(table, u, f),
        }
    }

    /// `base − c · d(load)/du`
    pub fn subtract_derivative(&self, base: &CsrMatrix<T>, c: T, u: &[T], f: &Nonlinearity<T>) -> CsrMatrix<T> {
        match self {
            Self::Product(mbar) => base.add_scaled_columns(-c, mbar, &f.apply_prime(u)),
            Self::Quadrature(table) => {
                let d = quadrature_load_derivative(table, base.pattern(), u, f);
                base.combine(T::one(), &d, -c)
            }
        }
    }
}

fn check_len<T>(v: &[T], n: usize) -> Result<(), NonlinearError> {
    if v.len() != n {
        return Err(NonlinearError::Dimension { expected: n, got: v.len() });
    }
    Ok(())
}

/// Full residual of one step:
/// `R = [(1+γΔt/2)M + θΔt²A] u_next − θΔt² F(u_next) − 2M u_mid
///      + [(1−γΔt/2)M + (1−θ)Δt²A] u_prev − (1−θ)Δt² F(u_prev)
///      − Δt² (θ s_next + (1−θ) s_prev)`.
#[allow(clippy::too_many_arguments)]
pub fn residual<T: Scalar>(
    coeffs: &StepCoefficients<T>,
    system: &GlobalSystem<T>,
    load: LoadOperator<'_, T>,
    u_next: &[T],
    u_mid: &[T],
    u_prev: &[T],
    f: &Nonlinearity<T>,
    source_next: Option<&[T]>,
    source_prev: Option<&[T]>,
) -> Result<Vec<T>, NonlinearError> {
    let n = system.n_dofs;
    for v in [u_next, u_mid, u_prev].into_iter().chain(source_next).chain(source_prev) {
        check_len(v, n)?;
    }
    let known = known_part(coeffs, system, &coeffs.previous_matrix(system), load, u_mid, u_prev, f, source_next, source_prev);
    Ok(implicit_part(coeffs, &coeffs.base_matrix(system), load, u_next, f, &known))
}

/// Everything in the residual that does not depend on `u_next`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn known_part<T: Scalar>(
    coeffs: &StepCoefficients<T>,
    system: &GlobalSystem<T>,
    previous: &CsrMatrix<T>,
    load: LoadOperator<'_, T>,
    u_mid: &[T],
    u_prev: &[T],
    f: &Nonlinearity<T>,
    source_next: Option<&[T]>,
    source_prev: Option<&[T]>,
) -> Vec<T> {
    let dt2 = coeffs.dt2();
    let explicit = T::one() - coeffs.theta;
    let mut r = previous.matvec(u_prev);
    let mu = system.mass.matvec(u_mid);
    for (ri, m) in r.iter_mut().zip(mu) {
        *ri -= m + m;
    }
    if explicit != T::zero() {
        for (ri, l) in r.iter_mut().zip(load.load(u_prev, f)) {
            *ri -= explicit * dt2 * l;
        }
    }
    if let Some(s) = source_next {
        for (ri, &si) in r.iter_mut().zip(s) {
            *ri -= dt2 * coeffs.theta * si;
        }
    }
    if let Some(s) = source_prev {
        for (ri, &si) in r.iter_mut().zip(s) {
            *ri -= dt2 * explicit * si;
        }
    }
    r
}

/// `base · u_next − θΔt² F(u_next) + known`
pub(crate) fn implicit_part<T: Scalar>(
    coeffs: &StepCoefficients<T>,
    base: &CsrMatrix<T>,
    load: LoadOperator<'_, T>,
    u_next: &[T],
    f: &Nonlinearity<T>,
    known: &[T],
) -> Vec<T> {
    let c = coeffs.theta * coeffs.dt2();
    let mut r = base.matvec(u_next);
    let l = load.load(u_next, f);
    for ((ri, li), &k) in r.iter_mut().zip(l).zip(known) {
        *ri += k - c * li;
    }
    r
}

/// Product-approximation Jacobian `base − θΔt² M̄ diag(f′(u_next))`.
pub fn jacobian<T: Scalar>(
    coeffs: &StepCoefficients<T>,
    system: &GlobalSystem<T>,
    u_next: &[T],
    f: &Nonlinearity<T>,
) -> CsrMatrix<T> {
    let base = coeffs.base_matrix(system);
    LoadOperator::Product(&system.projected_mass).subtract_derivative(&base, coeffs.theta * coeffs.dt2(), u_next, f)
}

/// Quadrature-treatment Jacobian `base − θΔt² Σ_K ∫ f′(Π⁰u_h) Π⁰η_j Π⁰η_i`.
pub fn quadrature_jacobian<T: Scalar>(
    coeffs: &StepCoefficients<T>,
    table: &ProjectedBasisTable<T>,
    base: &CsrMatrix<T>,
    u_next: &[T],
    f: &Nonlinearity<T>,
) -> CsrMatrix<T> {
    LoadOperator::Quadrature(table).subtract_derivative(base, coeffs.theta * coeffs.dt2(), u_next, f)
}

const MAX_HALVINGS: usize = 10;

/// Newton iteration `u ← u − J(u)⁻¹ R(u)` until `‖R‖₂ ≤ tol_residual`.
///
/// A step that increases the residual is halved (up to ten times); the last
/// trial is accepted regardless so that the iteration count stays honest.
pub fn newton_solve<T: Scalar>(
    config: &NewtonConfig,
    mut residual_fn: impl FnMut(&[T]) -> Vec<T>,
    mut jacobian_fn: impl FnMut(&[T]) -> CsrMatrix<T>,
    u_initial: Vec<T>,
) -> Result<(Vec<T>, NewtonReport), NonlinearError> {
    if !(config.tol_residual > 0.0) || config.max_iterations == 0 {
        return Err(NonlinearError::InvalidParameter("Newton needs tol_residual > 0 and max_iterations >= 1".into()));
    }
    let n = u_initial.len();
    let mut u = u_initial;
    let mut r = residual_fn(&u);
    check_len(&r, n)?;
    let mut norm = norm2(&r).to_f64_lossy();
    let mut report = NewtonReport { residual_history: vec![norm], ..Default::default() };
    let solver = SolverConfig { rel_tol: config.linear_solver_tol, max_iterations: 4 * n.max(500) };
    while !(norm <= config.tol_residual) && report.iterations < config.max_iterations {
        let iteration = report.iterations + 1;
        let j = jacobian_fn(&u);
        let (delta, _) = solve(&j, &r, &solver).map_err(|source| NonlinearError::LinearSolver { iteration, source })?;
        let mut step = T::one();
        let mut trial: Vec<T> = u.iter().zip(&delta).map(|(&a, &d)| a - d).collect();
        let mut r_trial = residual_fn(&trial);
        let mut trial_norm = norm2(&r_trial).to_f64_lossy();
        let mut halvings = 0;
        while !(trial_norm <= norm) && halvings < MAX_HALVINGS {
            step *= T::lit(0.5);
            trial = u.iter().zip(&delta).map(|(&a, &d)| a - step * d).collect();
            r_trial = residual_fn(&trial);
            trial_norm = norm2(&r_trial).to_f64_lossy();
            halvings += 1;
        }
        u = trial;
        r = r_trial;
        norm = trial_norm;
        report.iterations = iteration;
        report.residual_history.push(norm);
    }
    report.final_residual_norm = norm;
    report.converged = norm <= config.tol_residual;
    if report.converged {
        Ok((u, report))
    } else {
        Err(NonlinearError::NotConverged(report))
    }
}
