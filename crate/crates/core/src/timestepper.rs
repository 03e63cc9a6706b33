//! θ-weighted two-step time integration (Crank–Nicolson at θ = 1/2) with a
//! Newton solve per step.

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::assembly::{
    assemble_discretization, interpolate, AssemblyError, BoundaryData, Discretization, DofSplit,
    ProjectedBasisTable, SpaceTimeFn,
};
use crate::linalg::{solve, CsrMatrix, SolverConfig, SolverError};
use crate::mesh::PolygonalMesh;
use crate::nonlinear::{
    implicit_part, known_part, newton_solve, LoadOperator, NewtonConfig, NewtonReport, NonlinearError,
    NonlinearTreatment, Nonlinearity, StepCoefficients,
};
use crate::scalar::Scalar;

pub type SpaceFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Degree of the rule used to load external sources.
pub const SOURCE_QUADRATURE_DEGREE: usize = 4;

#[derive(Debug, Error)]
pub enum TimeStepError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("time step {step}")]
    Step {
        step: usize,
        #[source]
        source: NonlinearError,
    },
    #[error("initial acceleration solve")]
    Start(#[from] SolverError),
}

#[derive(Clone)]
pub struct SchemeParams<T> {
    pub gamma: T,
    pub theta: T,
    pub dt: T,
    pub t_final: T,
    pub nonlinearity: Nonlinearity<T>,
    pub source: Option<SpaceTimeFn<T>>,
    pub boundary: BoundaryData<T>,
    pub newton: NewtonConfig,
    pub treatment: NonlinearTreatment,
    /// Taylor start `u¹ = u⁰ + Δt v⁰ + Δt²/2 a⁰` instead of `u⁰ + Δt v⁰`.
    pub second_order_start: bool,
}

impl<T: Scalar> SchemeParams<T> {
    /// Crank–Nicolson, undamped, no source, product approximation.
    pub fn new(dt: T, t_final: T, nonlinearity: Nonlinearity<T>, boundary: BoundaryData<T>) -> Self {
        Self {
            gamma: T::zero(),
            theta: T::lit(0.5),
            dt,
            t_final,
            nonlinearity,
            source: None,
            boundary,
            newton: NewtonConfig::default(),
            treatment: NonlinearTreatment::ProductApprox,
            second_order_start: false,
        }
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_theta(mut self, theta: T) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_source(mut self, g: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(g));
        self
    }

    pub fn with_treatment(mut self, treatment: NonlinearTreatment) -> Self {
        self.treatment = treatment;
        self
    }

    pub fn with_newton(mut self, newton: NewtonConfig) -> Self {
        self.newton = newton;
        self
    }

    pub fn with_second_order_start(mut self, on: bool) -> Self {
        self.second_order_start = on;
        self
    }

    pub fn coefficients(&self) -> StepCoefficients<T> {
        StepCoefficients { gamma: self.gamma, dt: self.dt, theta: self.theta }
    }

    /// `N` with `N·Δt = T`; the ratio must be an integer up to rounding.
    pub fn n_steps(&self) -> Result<usize, TimeStepError> {
        self.coefficients().validate().map_err(|e| TimeStepError::InvalidParameter(e.to_string()))?;
        if !(self.t_final > T::zero()) || !self.t_final.is_finite() {
            return Err(TimeStepError::InvalidParameter(format!("final time {} must be > 0", self.t_final)));
        }
        let ratio = self.t_final / self.dt;
        let n = ratio.round();
        if n < T::one() || (ratio - n).abs() > T::lit(1e-6) {
            return Err(TimeStepError::InvalidParameter(format!(
                "dt = {} does not divide T = {} into whole steps",
                self.dt, self.t_final
            )));
        }
        Ok(n.to_usize().expect("step count fits usize"))
    }

    pub fn time_of(&self, step: usize) -> T {
        T::from_usize_lossy(step) * self.dt
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for SchemeParams<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeParams")
            .field("gamma", &self.gamma)
            .field("theta", &self.theta)
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("nonlinearity", &self.nonlinearity)
            .field("source", &self.source.as_ref().map(|_| ".."))
            .field("boundary", &self.boundary)
            .field("newton", &self.newton)
            .field("treatment", &self.treatment)
            .field("second_order_start", &self.second_order_start)
            .finish()
    }
}

/// Displacement `h(x, y)` and velocity `g(x, y)` at `t = 0`.
#[derive(Clone)]
pub struct InitialData<T> {
    pub displacement: SpaceFn<T>,
    pub velocity: SpaceFn<T>,
}

impl<T: Scalar> InitialData<T> {
    pub fn new(
        displacement: impl Fn(T, T) -> T + Send + Sync + 'static,
        velocity: impl Fn(T, T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { displacement: Arc::new(displacement), velocity: Arc::new(velocity) }
    }
}

impl<T> std::fmt::Debug for InitialData<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("InitialData(..)")
    }
}

/// Two consecutive levels `u^{step−1}`, `u^{step}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeState<T> {
    pub step: usize,
    pub u_prev: Vec<T>,
    pub u_curr: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    /// `(t, u)` at the requested times, in increasing order.
    pub snapshots: Vec<(T, Vec<T>)>,
    /// One report per Newton solve, i.e. for steps `2..=N`.
    pub newton_reports: Vec<NewtonReport>,
    pub wall_time: f64,
    pub final_state: TimeState<T>,
}

impl<T> Trajectory<T> {
    pub fn final_solution(&self) -> &[T] {
        &self.final_state.u_curr
    }

    pub fn max_newton_iterations(&self) -> usize {
        self.newton_reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.newton_reports.iter().map(|r| r.iterations).sum()
    }
}

/// `u⁰ = I_h h`, `u¹ = u⁰ + Δt·I_h g`.
pub fn initialize<T: Scalar>(mesh: &PolygonalMesh<T>, init: &InitialData<T>, dt: T) -> (Vec<T>, Vec<T>) {
    let u0 = interpolate(|x, y| (init.displacement)(x, y), mesh);
    let v0 = interpolate(|x, y| (init.velocity)(x, y), mesh);
    let u1 = u0.iter().zip(&v0).map(|(&u, &v)| u + dt * v).collect();
    (u0, u1)
}

/// Time integrator bound to one mesh, its matrices and a parameter set.
pub struct Stepper<'a, T> {
    params: &'a SchemeParams<T>,
    mesh: &'a PolygonalMesh<T>,
    disc: &'a Discretization<T>,
    split: DofSplit,
    coeffs: StepCoefficients<T>,
    base: CsrMatrix<T>,
    previous: CsrMatrix<T>,
    source_table: Option<ProjectedBasisTable<T>>,
    nonlinear_table: Option<ProjectedBasisTable<T>>,
    n_steps: usize,
    source_cache: Vec<(usize, Vec<T>)>,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(
        params: &'a SchemeParams<T>,
        mesh: &'a PolygonalMesh<T>,
        disc: &'a Discretization<T>,
    ) -> Result<Self, TimeStepError> {
        let n_steps = params.n_steps()?;
        if disc.system.n_dofs != mesh.n_vertices() {
            return Err(TimeStepError::InvalidParameter("discretisation does not belong to the mesh".into()));
        }
        let coeffs = params.coefficients();
        let source_table = match params.source {
            Some(_) => Some(ProjectedBasisTable::new(mesh, &disc.operators, SOURCE_QUADRATURE_DEGREE)?),
            None => None,
        };
        let nonlinear_table = match params.treatment {
            NonlinearTreatment::Quadrature { degree } if degree != SOURCE_QUADRATURE_DEGREE || source_table.is_none() => {
                Some(ProjectedBasisTable::new(mesh, &disc.operators, degree)?)
            }
            _ => None,
        };
        Ok(Self {
            params,
            mesh,
            disc,
            split: DofSplit::new(mesh, &params.boundary),
            coeffs,
            base: coeffs.base_matrix(&disc.system),
            previous: coeffs.previous_matrix(&disc.system),
            source_table,
            nonlinear_table,
            n_steps,
            source_cache: Vec::new(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn split(&self) -> &DofSplit {
        &self.split
    }

    fn load_operator(&self) -> LoadOperator<'_, T> {
        match self.params.treatment {
            NonlinearTreatment::ProductApprox => LoadOperator::Product(&self.disc.system.projected_mass),
            NonlinearTreatment::Quadrature { .. } => LoadOperator::Quadrature(
                self.nonlinear_table.as_ref().or(self.source_table.as_ref()).expect("quadrature table built"),
            ),
        }
    }

    /// `∫ g(·, t_step) Π⁰η_i`, cached for reuse by the following steps.
    fn source_load(&mut self, step: usize) -> Option<Vec<T>> {
        let g = self.params.source.as_ref()?;
        if let Some((_, v)) = self.source_cache.iter().find(|(s, _)| *s == step) {
            return Some(v.clone());
        }
        let t = self.params.time_of(step);
        let v = self.source_table.as_ref().expect("source table built").load(|p| g(p.x, p.y, t));
        if self.source_cache.len() >= 3 {
            self.source_cache.remove(0);
        }
        self.source_cache.push((step, v.clone()));
        Some(v)
    }

    /// `(u⁰, u¹)` from the initial data.
    pub fn initialize(&mut self, init: &InitialData<T>) -> Result<TimeState<T>, TimeStepError> {
        let dt = self.params.dt;
        let (u0, mut u1) = initialize(self.mesh, init, dt);
        if self.params.second_order_start {
            u1 = self.taylor_start(init, &u0)?;
        }
        Ok(TimeState { step: 1, u_prev: u0, u_curr: u1 })
    }

    /// `u¹ = u⁰ + Δt v⁰ + Δt²/2 a⁰` with `M a⁰ = −A u⁰ + F(u⁰) + s(0) − γ M v⁰`
    /// on free DOFs and pinned Dirichlet values at `t = Δt`.
    fn taylor_start(&mut self, init: &InitialData<T>, u0: &[T]) -> Result<Vec<T>, TimeStepError> {
        let sys = &self.disc.system;
        let dt = self.params.dt;
        let half_dt2 = T::lit(0.5) * dt * dt;
        let v0 = interpolate(|x, y| (init.velocity)(x, y), self.mesh);
        let mut rhs = self.load_operator().load(u0, &self.params.nonlinearity);
        for ((r, au), mv) in rhs.iter_mut().zip(sys.stiffness.matvec(u0)).zip(sys.mass.matvec(&v0)) {
            *r -= au + self.params.gamma * mv;
        }
        if let Some(s) = self.source_load(0) {
            for (r, si) in rhs.iter_mut().zip(s) {
                *r += si;
            }
        }
        let fixed_u1 = self.params.boundary.fixed_values(self.mesh, &self.split, dt);
        let mut accel = vec![T::zero(); u0.len()];
        let fixed_accel: Vec<T> = self
            .split
            .fixed
            .iter()
            .zip(&fixed_u1)
            .map(|(&i, &g1)| (g1 - u0[i] - dt * v0[i]) / half_dt2)
            .collect();
        self.split.scatter_fixed(&fixed_accel, &mut accel);
        let lift = sys.mass.matvec(&accel);
        let b: Vec<T> = self.split.free.iter().map(|&i| rhs[i] - lift[i]).collect();
        let mff = self.split.reduce_matrix(&sys.mass);
        let (a_free, _) = solve(&mff, &b, &SolverConfig { rel_tol: self.params.newton.linear_solver_tol, ..Default::default() })?;
        self.split.scatter_free(&a_free, &mut accel);
        Ok(u0.iter().zip(&v0).zip(&accel).map(|((&u, &v), &a)| u + dt * v + half_dt2 * a).collect())
    }

    /// Solves for `u^{step}` given `u^{step−2}` and `u^{step−1}`.
    pub fn step(&mut self, u_prev: &[T], u_mid: &[T], step: usize) -> Result<(Vec<T>, NewtonReport), TimeStepError> {
        if step < 2 {
            return Err(TimeStepError::InvalidParameter(format!("step index {step} < 2")));
        }
        let sys = &self.disc.system;
        for v in [u_prev, u_mid] {
            if v.len() != sys.n_dofs {
                return Err(TimeStepError::Step {
                    step,
                    source: NonlinearError::Dimension { expected: sys.n_dofs, got: v.len() },
                });
            }
        }
        let s_next = self.source_load(step);
        let s_prev = self.source_load(step - 2);
        let t_next = self.params.time_of(step);
        let f = &self.params.nonlinearity;
        let load = self.load_operator();
        let known =
            known_part(&self.coeffs, sys, &self.previous, load, u_mid, u_prev, f, s_next.as_deref(), s_prev.as_deref());

        let mut template = u_mid.to_vec();
        let fixed = self.params.boundary.fixed_values(self.mesh, &self.split, t_next);
        self.split.scatter_fixed(&fixed, &mut template);
        let c = self.coeffs.theta * self.coeffs.dt * self.coeffs.dt;
        let split = &self.split;
        let (base, coeffs) = (&self.base, &self.coeffs);
        let expand = |w: &[T]| {
            let mut full = template.clone();
            split.scatter_free(w, &mut full);
            full
        };
        let (w, report) = newton_solve(
            &self.params.newton,
            |w| split.restrict(&implicit_part(coeffs, base, load, &expand(w), f, &known)),
            |w| split.reduce_matrix(&load.subtract_derivative(base, c, &expand(w), f)),
            split.restrict(&template),
        )
        .map_err(|source| TimeStepError::Step { step, source })?;
        Ok((expand(&w), report))
    }

    /// Advances `state` to step `N`, recording snapshots at `snapshot_times`
    /// (rounded to the nearest step) or at every step when `full_history`.
    pub fn run_from(
        &mut self,
        state: TimeState<T>,
        snapshot_times: &[T],
        full_history: bool,
    ) -> Result<Trajectory<T>, TimeStepError> {
        let clock = Instant::now();
        let mut wanted = Vec::with_capacity(snapshot_times.len());
        for &t in snapshot_times {
            let k = (t / self.params.dt).round();
            if !(k >= T::zero()) || k > T::from_usize_lossy(self.n_steps) {
                return Err(TimeStepError::InvalidParameter(format!("snapshot time {t} outside [0, T]")));
            }
            wanted.push(k.to_usize().expect("step index"));
        }
        wanted.sort_unstable();
        wanted.dedup();
        let want = |k: usize| full_history || wanted.binary_search(&k).is_ok();

        let mut snapshots = Vec::new();
        let TimeState { step: first, mut u_prev, mut u_curr } = state;
        if first >= 1 && want(first - 1) {
            snapshots.push((self.params.time_of(first - 1), u_prev.clone()));
        }
        if want(first) {
            snapshots.push((self.params.time_of(first), u_curr.clone()));
        }
        let mut newton_reports = Vec::with_capacity(self.n_steps.saturating_sub(first));
        for step in first + 1..=self.n_steps {
            let (u_next, report) = self.step(&u_prev, &u_curr, step)?;
            newton_reports.push(report);
            u_prev = std::mem::replace(&mut u_curr, u_next);
            if want(step) {
                snapshots.push((self.params.time_of(step), u_curr.clone()));
            }
        }
        let step = first.max(self.n_steps);
        Ok(Trajectory {
            snapshots,
            newton_reports,
            wall_time: clock.elapsed().as_secs_f64(),
            final_state: TimeState { step, u_prev, u_curr },
        })
    }

    pub fn run(&mut self, init: &InitialData<T>, snapshot_times: &[T]) -> Result<Trajectory<T>, TimeStepError> {
        let clock = Instant::now();
        let state = self.initialize(init)?;
        let mut traj = self.run_from(state, snapshot_times, false)?;
        traj.wall_time = clock.elapsed().as_secs_f64();
        Ok(traj)
    }
}

/// Assembles the mesh and integrates from the initial data to `T`.
pub fn run<T: Scalar>(
    params: &SchemeParams<T>,
    mesh: &PolygonalMesh<T>,
    init: &InitialData<T>,
    snapshot_times: &[T],
) -> Result<Trajectory<T>, TimeStepError> {
    let clock = Instant::now();
    let disc = assemble_discretization(mesh)?;
    let mut traj = Stepper::new(params, mesh, &disc)?.run(init, snapshot_times)?;
    traj.wall_time = clock.elapsed().as_secs_f64();
    Ok(traj)
}

/// Discrete energy between levels `n` and `n+1` for `f = −V′`:
/// `½‖δu‖²_M + ¼(a(uⁿ,uⁿ) + a(uⁿ⁺¹,uⁿ⁺¹)) + ½ 1ᵀM̄(V(uⁿ) + V(uⁿ⁺¹))`.
pub fn discrete_energy<T: Scalar>(
    disc: &Discretization<T>,
    u_n: &[T],
    u_np1: &[T],
    dt: T,
    potential: impl Fn(T) -> T,
) -> T {
    let sys = &disc.system;
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let du: Vec<T> = u_np1.iter().zip(u_n).map(|(&a, &b)| (a - b) / dt).collect();
    let ones = vec![T::one(); sys.n_dofs];
    let v: Vec<T> = u_n.iter().zip(u_np1).map(|(&a, &b)| potential(a) + potential(b)).collect();
    half * sys.mass.bilinear(&du, &du)
        + quarter * (sys.stiffness.bilinear(u_n, u_n) + sys.stiffness.bilinear(u_np1, u_np1))
        + half * sys.projected_mass.bilinear(&ones, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, Rect};
    use crate::mesh::{generate_distorted_quads, generate_voronoi};

    #[test]
    fn initial_levels() {
        let mesh = generate_distorted_quads::<f64>(Rect::unit(), 3, 3, 0.2, 1).unwrap();
        let (u0, u1) = initialize(&mesh, &InitialData::new(|x, y| x * y, |_, _| 0.0), 0.1);
        assert_eq!(u0, u1);
        let (u0, u1) = initialize(&mesh, &InitialData::new(|x, _| x, |_, _| 1.0), 0.1);
        for ((a, b), p) in u0.iter().zip(&u1).zip(mesh.vertices()) {
            assert_eq!(*a, p.x);
            assert!((b - (p.x + 0.1)).abs() < 1e-15);
        }
    }

    #[test]
    fn step_count_validation() {
        let p = SchemeParams::new(0.1, 1.0, Nonlinearity::<f64>::zero(), BoundaryData::NeumannHomogeneous);
        assert_eq!(p.n_steps().unwrap(), 10);
        let p = SchemeParams::new(0.3, 1.0, Nonlinearity::<f64>::zero(), BoundaryData::NeumannHomogeneous);
        assert!(p.n_steps().is_err());
        let p = SchemeParams::new(1.0 / 3.0, 1.0, Nonlinearity::<f64>::zero(), BoundaryData::NeumannHomogeneous);
        assert_eq!(p.n_steps().unwrap(), 3);
        let p = SchemeParams::new(0.1, 1.0, Nonlinearity::<f64>::zero(), BoundaryData::NeumannHomogeneous).with_theta(2.0);
        assert!(p.n_steps().is_err());
    }

    #[test]
    fn single_cell_linear_step() {
        let v = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
        let mesh = PolygonalMesh::new(v, vec![vec![0, 1, 2, 3]], Rect::unit()).unwrap();
        let disc = assemble_discretization(&mesh).unwrap();
        let params = SchemeParams::new(0.1, 0.2, Nonlinearity::zero(), BoundaryData::NeumannHomogeneous);
        let mut stepper = Stepper::new(&params, &mesh, &disc).unwrap();
        let u_prev = vec![0.0, 0.1, 0.2, 0.3];
        let u_mid = vec![0.1, 0.1, 0.3, 0.2];
        let (u, report) = stepper.step(&u_prev, &u_mid, 2).unwrap();
        assert!(report.iterations <= 1);
        let r = crate::nonlinear::residual(
            &params.coefficients(),
            &disc.system,
            LoadOperator::Product(&disc.system.projected_mass),
            &u,
            &u_mid,
            &u_prev,
            &params.nonlinearity,
            None,
            None,
        )
        .unwrap();
        assert!(crate::scalar::norm2(&r) <= 1e-12);
    }

    #[test]
    fn single_step_trajectory() {
        let mesh = generate_distorted_quads::<f64>(Rect::unit(), 2, 2, 0.0, 0).unwrap();
        let params = SchemeParams::new(0.1, 0.1, Nonlinearity::sine_gordon(), BoundaryData::NeumannHomogeneous);
        let init = InitialData::new(|x, _| x, |_, _| 1.0);
        let traj = run(&params, &mesh, &init, &[0.0, 0.1]).unwrap();
        assert_eq!(traj.snapshots.len(), 2);
        assert_eq!(traj.snapshots[0].0, 0.0);
        assert_eq!(traj.snapshots[1].0, 0.1);
        assert!(traj.newton_reports.is_empty());
        assert!(run(&params, &mesh, &init, &[0.5]).is_err());
    }

    #[test]
    fn dirichlet_values_are_pinned() {
        let mesh = generate_voronoi::<f64>(Rect::unit(), 30, 3, 2).unwrap();
        let params = SchemeParams::new(0.05, 0.2, Nonlinearity::sine_gordon(), BoundaryData::dirichlet(|x, y, t| x + y + t));
        let init = InitialData::new(|x, y| x + y, |_, _| 1.0);
        let traj = run(&params, &mesh, &init, &[0.2]).unwrap();
        let u = traj.final_solution();
        for i in mesh.boundary_vertices() {
            let p = mesh.vertices()[i];
            assert!((u[i] - (p.x + p.y + 0.2)).abs() < 1e-14);
        }
    }

    #[test]
    fn runs_are_bit_identical_and_restartable() {
        let mesh = generate_voronoi::<f64>(Rect::unit(), 40, 3, 3).unwrap();
        let disc = assemble_discretization(&mesh).unwrap();
        let params = SchemeParams::new(0.05, 0.5, Nonlinearity::sine_gordon(), BoundaryData::homogeneous_dirichlet())
            .with_source(|x, y, t| (x * y * (1.0 - x) * (1.0 - y)) * (1.0 + t));
        let init = InitialData::new(|x: f64, y: f64| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin(), |_, _| 0.0);
        let a = Stepper::new(&params, &mesh, &disc).unwrap().run(&init, &[0.25, 0.5]).unwrap();
        let b = Stepper::new(&params, &mesh, &disc).unwrap().run(&init, &[0.25, 0.5]).unwrap();
        assert_eq!(a.snapshots, b.snapshots);

        let half = SchemeParams { t_final: 0.25, ..params.clone() };
        let first = Stepper::new(&half, &mesh, &disc).unwrap().run(&init, &[]).unwrap();
        let rest = Stepper::new(&params, &mesh, &disc).unwrap().run_from(first.final_state.clone(), &[0.5], false).unwrap();
        assert_eq!(rest.snapshots.last().unwrap().1, a.snapshots[1].1);
        assert_eq!(first.final_state.u_curr, a.snapshots[0].1);
    }

    #[test]
    fn energy_is_nearly_conserved_without_damping() {
        let rect = Rect::from_f64(-3.0, 3.0, -3.0, 3.0);
        let mesh = generate_voronoi::<f64>(rect, 300, 10, 11).unwrap();
        let disc = assemble_discretization(&mesh).unwrap();
        let dt = 0.01;
        let params = SchemeParams::new(dt, 1.0, Nonlinearity::sine_gordon(), BoundaryData::NeumannHomogeneous);
        let init = InitialData::new(|x: f64, y: f64| 2.0 * (-(x * x + y * y)).exp(), |_, _| 0.0);
        let mut stepper = Stepper::new(&params, &mesh, &disc).unwrap();
        let start = stepper.initialize(&init).unwrap();
        let traj = stepper.run_from(start, &[], true).unwrap();
        let pot = |u: f64| 1.0 - u.cos();
        let e: Vec<f64> =
            traj.snapshots.windows(2).map(|w| discrete_energy(&disc, &w[0].1, &w[1].1, dt, pot)).collect();
        assert_eq!(e.len(), 100);
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max) / e[0];
        assert!(drift < 0.01, "drift {drift}");
    }

    #[test]
    fn damping_reduces_velocity() {
        let rect = Rect::from_f64(-3.0, 3.0, -3.0, 3.0);
        let mesh = generate_voronoi::<f64>(rect, 150, 5, 12).unwrap();
        let disc = assemble_discretization(&mesh).unwrap();
        let init = InitialData::new(|x: f64, y: f64| 2.0 * (-(x * x + y * y)).exp(), |_, _| 0.0);
        let speed = |gamma: f64| {
            let params = SchemeParams::new(0.05, 3.0, Nonlinearity::sine_gordon(), BoundaryData::NeumannHomogeneous)
                .with_gamma(gamma);
            let t = Stepper::new(&params, &mesh, &disc).unwrap().run(&init, &[]).unwrap();
            let s = &t.final_state;
            let v: Vec<f64> = s.u_curr.iter().zip(&s.u_prev).map(|(a, b)| (a - b) / 0.05).collect();
            disc.system.mass.bilinear(&v, &v).sqrt()
        };
        assert!(speed(0.5) < speed(0.0));
    }

    #[test]
    fn second_order_start_is_exact_for_uniform_acceleration() {
        // u = t²/2 solves u_tt = 1 with zero initial data and Neumann walls
        let mesh = generate_voronoi::<f64>(Rect::unit(), 60, 5, 5).unwrap();
        let disc = assemble_discretization(&mesh).unwrap();
        let dt = 0.2;
        let params = SchemeParams::new(dt, dt, Nonlinearity::zero(), BoundaryData::NeumannHomogeneous)
            .with_source(|_, _, _| 1.0)
            .with_second_order_start(true);
        let init = InitialData::new(|_, _| 0.0, |_, _| 0.0);
        let s = Stepper::new(&params, &mesh, &disc).unwrap().initialize(&init).unwrap();
        assert!(s.u_curr.iter().all(|v| (v - 0.02).abs() < 1e-10));

        let pinned = SchemeParams::new(dt, dt, Nonlinearity::zero(), BoundaryData::dirichlet(|x, _, t| x + t * t))
            .with_second_order_start(true);
        let init = InitialData::new(|x, _| x, |_, _| 0.0);
        let s = Stepper::new(&pinned, &mesh, &disc).unwrap().initialize(&init).unwrap();
        for i in mesh.boundary_vertices() {
            assert!((s.u_curr[i] - (mesh.vertices()[i].x + 0.04)).abs() < 1e-14);
        }
    }
}
