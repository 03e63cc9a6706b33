//! Benchmark experiments: convergence sweeps, the treatment comparison and
//! the ring-soliton collision, plus their output files and acceptance checks.

mod checks;
mod config;
mod output;
pub mod problems;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use checks::{
    check_solitons, check_test1, check_test2, check_test3, Check, Outcome, TEST1_FINEST_L2, TEST1_H1_RATE,
    TEST1_L2_RATE, TEST2_NEWTON, TEST2_L2_AGREEMENT, TEST3_FINEST_L2, TEST3_RATES, TEST3_RATE_TOL,
};
pub use config::{ExperimentConfig, MeshFamily, TestId, TreatmentChoice, SOLITON_CELLS, TEST3_CELLS};
pub use output::{
    emit_csv, emit_field, read_field, read_field_from, write_csv_to, write_field_to, FieldSnapshot, CSV_HEADER,
};
pub use problems::Problem;

use crate::assembly::{assemble_discretization, interpolate, AssemblyError, Discretization};
use crate::geometry::Rect;
use crate::mesh::{
    generate_distorted_quads, generate_nonconvex, generate_structured_triangles, generate_voronoi, MeshError,
    PolygonalMesh,
};
use crate::nonlinear::{NewtonConfig, NonlinearTreatment};
use crate::norms::{rates, relative_h1, relative_l2, ConvergenceRecord, NormError, RefinementParameter};
use crate::timestepper::{SchemeParams, Stepper, TimeStepError, Trajectory};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    TimeStep(#[from] TimeStepError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn problem_for(test: TestId) -> Problem {
    match test {
        TestId::Test1 => problems::test1(),
        TestId::Test2 => problems::test2(),
        TestId::Test3 => problems::test3(),
        TestId::Solitons => problems::solitons(),
    }
}

/// One mesh of `family` on `rect`; `size` counts cells (Voronoi) or cells per side.
pub fn build_mesh(
    family: MeshFamily,
    size: usize,
    rect: Rect<f64>,
    lloyd_iterations: usize,
    distortion: f64,
    seed: u64,
) -> Result<PolygonalMesh<f64>, MeshError> {
    match family {
        MeshFamily::Voronoi => generate_voronoi(rect, size, lloyd_iterations, seed),
        MeshFamily::Distorted => generate_distorted_quads(rect, size, size, distortion, seed),
        MeshFamily::Nonconvex => generate_nonconvex(rect, size, size),
        MeshFamily::Triangles => generate_structured_triangles(rect, size, size),
    }
}

fn mesh_level(cfg: &ExperimentConfig, problem: &Problem, size: usize) -> Result<PolygonalMesh<f64>, MeshError> {
    build_mesh(cfg.mesh_family, size, problem.domain, cfg.lloyd_iterations, cfg.distortion, cfg.seed)
}

fn scheme(cfg: &ExperimentConfig, problem: &Problem, dt: f64, treatment: NonlinearTreatment) -> SchemeParams<f64> {
    let mut p = SchemeParams::new(dt, cfg.t_final, problem.nonlinearity.clone(), problem.boundary.clone())
        .with_gamma(problem.gamma)
        .with_theta(cfg.theta)
        .with_treatment(treatment)
        .with_second_order_start(cfg.second_order_start)
        .with_newton(NewtonConfig {
            tol_residual: cfg.newton_tol,
            max_iterations: cfg.newton_max_iterations,
            ..NewtonConfig::default()
        });
    if let Some(g) = problem.source {
        p = p.with_source(g);
    }
    p
}

fn treatment_of(cfg: &ExperimentConfig, choice: TreatmentChoice) -> NonlinearTreatment {
    match choice {
        TreatmentChoice::Quadrature => NonlinearTreatment::Quadrature { degree: cfg.quadrature_degree },
        _ => NonlinearTreatment::ProductApprox,
    }
}

/// Integration to `T` with timing of setup plus time loop.
fn integrate(
    params: &SchemeParams<f64>,
    mesh: &PolygonalMesh<f64>,
    disc: &Discretization<f64>,
    problem: &Problem,
    snapshot_times: &[f64],
) -> Result<(Trajectory<f64>, f64), HarnessError> {
    let clock = Instant::now();
    let mut stepper = Stepper::new(params, mesh, disc)?;
    let traj = stepper.run(&problem.initial, snapshot_times)?;
    Ok((traj, clock.elapsed().as_secs_f64()))
}

fn error_record(
    problem: &Problem,
    mesh: &PolygonalMesh<f64>,
    disc: &Discretization<f64>,
    params: &SchemeParams<f64>,
    traj: &Trajectory<f64>,
    seconds: f64,
) -> Result<ConvergenceRecord, HarnessError> {
    let exact = problem.exact.ok_or_else(|| HarnessError::Config(format!("{} has no exact solution", problem.name)))?;
    let t = params.time_of(traj.final_state.step);
    let reference = interpolate(|x, y| exact(x, y, t), mesh);
    let u = traj.final_solution();
    Ok(ConvergenceRecord {
        h: mesh.mesh_size(),
        dt: params.dt,
        dofs: mesh.n_vertices(),
        l2_error: relative_l2(&disc.system, &reference, u)?,
        h1_error: relative_h1(&disc.system, &reference, u)?,
        rate_l2: None,
        rate_h1: None,
        newton_total: traj.total_newton_iterations(),
        wall_seconds: seconds,
    })
}

fn add_rates(records: &mut [ConvergenceRecord], by: RefinementParameter) -> Result<(), HarnessError> {
    if records.len() >= 2 {
        rates(records, by)?;
    }
    Ok(())
}

/// Spatial sweep of the line-soliton problem, one table per `dt`
/// (concatenated in `dt` order, levels coarse to fine).
pub fn run_test1(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRecord>, HarnessError> {
    spatial_sweep(cfg, &problems::test1())
}

fn spatial_sweep(cfg: &ExperimentConfig, problem: &Problem) -> Result<Vec<ConvergenceRecord>, HarnessError> {
    let levels: Vec<(PolygonalMesh<f64>, Discretization<f64>)> = cfg
        .mesh_sizes
        .iter()
        .map(|&n| {
            let mesh = mesh_level(cfg, problem, n)?;
            let disc = assemble_discretization(&mesh)?;
            Ok((mesh, disc))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut all = Vec::new();
    for &dt in &cfg.dt {
        let params = scheme(cfg, problem, dt, treatment_of(cfg, cfg.treatment));
        let mut group = Vec::with_capacity(levels.len());
        for (mesh, disc) in &levels {
            let (traj, seconds) = integrate(&params, mesh, disc, problem, &[])?;
            group.push(error_record(problem, mesh, disc, &params, &traj, seconds)?);
        }
        add_rates(&mut group, RefinementParameter::MeshSize)?;
        all.extend(group);
    }
    Ok(all)
}

/// Result of one treatment on one mesh level.
#[derive(Clone, Debug, PartialEq)]
pub struct TreatmentResult {
    pub l2_error: f64,
    pub seconds: f64,
    /// Largest Newton iteration count of any step.
    pub newton_max: usize,
    pub newton_total: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreatmentComparison {
    pub h: f64,
    pub dofs: usize,
    pub product: Option<TreatmentResult>,
    pub quadrature: Option<TreatmentResult>,
}

/// Product approximation against element quadrature of the nonlinear load.
pub fn run_test2(cfg: &ExperimentConfig) -> Result<Vec<TreatmentComparison>, HarnessError> {
    let problem = problems::test2();
    let dt = cfg.dt[0];
    let mut rows = Vec::with_capacity(cfg.mesh_sizes.len());
    for &n in &cfg.mesh_sizes {
        let mesh = mesh_level(cfg, &problem, n)?;
        let disc = assemble_discretization(&mesh)?;
        let run = |choice: TreatmentChoice| -> Result<TreatmentResult, HarnessError> {
            let params = scheme(cfg, &problem, dt, treatment_of(cfg, choice));
            let (traj, seconds) = integrate(&params, &mesh, &disc, &problem, &[])?;
            let rec = error_record(&problem, &mesh, &disc, &params, &traj, seconds)?;
            Ok(TreatmentResult {
                l2_error: rec.l2_error,
                seconds: if cfg.timing { seconds } else { 0.0 },
                newton_max: traj.max_newton_iterations(),
                newton_total: traj.total_newton_iterations(),
            })
        };
        let product = matches!(cfg.treatment, TreatmentChoice::ProductApprox | TreatmentChoice::Both)
            .then(|| run(TreatmentChoice::ProductApprox))
            .transpose()?;
        let quadrature = matches!(cfg.treatment, TreatmentChoice::Quadrature | TreatmentChoice::Both)
            .then(|| run(TreatmentChoice::Quadrature))
            .transpose()?;
        rows.push(TreatmentComparison { h: mesh.mesh_size(), dofs: mesh.n_vertices(), product, quadrature });
    }
    Ok(rows)
}

/// Header of the treatment comparison table.
pub const COMPARISON_HEADER: &str = "h,dofs,l2_product,seconds_product,ni_product,l2_quadrature,seconds_quadrature,ni_quadrature";

pub fn write_comparison_to<W: std::io::Write>(rows: &[TreatmentComparison], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{COMPARISON_HEADER}")?;
    let cols = |r: &Option<TreatmentResult>| match r {
        Some(r) => format!("{:.6e},{:.6},{}", r.l2_error, r.seconds, r.newton_max),
        None => ",,".to_string(),
    };
    for r in rows {
        writeln!(out, "{:.6e},{},{},{}", r.h, r.dofs, cols(&r.product), cols(&r.quadrature))?;
    }
    out.flush()
}

/// Temporal sweep on one fine mesh.
pub fn run_test3(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRecord>, HarnessError> {
    let problem = problems::test3();
    let mesh = mesh_level(cfg, &problem, cfg.mesh_sizes[0])?;
    let disc = assemble_discretization(&mesh)?;
    let mut records = Vec::with_capacity(cfg.dt.len());
    for &dt in &cfg.dt {
        let params = scheme(cfg, &problem, dt, treatment_of(cfg, cfg.treatment));
        let (traj, seconds) = integrate(&params, &mesh, &disc, &problem, &[])?;
        records.push(error_record(&problem, &mesh, &disc, &params, &traj, seconds)?);
    }
    add_rates(&mut records, RefinementParameter::TimeStep)?;
    Ok(records)
}

/// Lines across which the quarter-domain soliton field is mirrored for display.
pub const SOLITON_MIRROR: (f64, f64) = (-10.0, -10.0);

#[derive(Clone, Debug)]
pub struct SolitonRun {
    pub h: f64,
    pub dofs: usize,
    /// Quarter-domain fields at the requested times.
    pub snapshots: Vec<FieldSnapshot>,
    pub newton_max: usize,
    pub newton_total: usize,
    /// Largest `|u|` over every time level of the run.
    pub max_abs: f64,
    pub seconds: f64,
}

impl SolitonRun {
    pub fn reflected(&self) -> Vec<FieldSnapshot> {
        self.snapshots.iter().map(|s| s.reflect(SOLITON_MIRROR.0, SOLITON_MIRROR.1)).collect()
    }
}

pub fn run_solitons(cfg: &ExperimentConfig) -> Result<SolitonRun, HarnessError> {
    let problem = problems::solitons_with(cfg.ring_velocity);
    let mesh = mesh_level(cfg, &problem, cfg.mesh_sizes[0])?;
    let disc = assemble_discretization(&mesh)?;
    let params = scheme(cfg, &problem, cfg.dt[0], treatment_of(cfg, cfg.treatment));
    let clock = Instant::now();
    let mut stepper = Stepper::new(&params, &mesh, &disc)?;
    let mut state = stepper.initialize(&problem.initial)?;
    let track = |u: &[f64], m: f64| u.iter().fold(m, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m });
    let mut max_abs = track(&state.u_curr, track(&state.u_prev, 0.0));
    let wanted: Vec<usize> = cfg.snapshot_times.iter().map(|&t| (t / params.dt).round() as usize).collect();
    let mut snapshots = Vec::new();
    let mut take = |step: usize, u: &[f64]| -> Result<(), HarnessError> {
        if wanted.contains(&step) {
            snapshots.push(FieldSnapshot::from_mesh(&mesh, params.time_of(step), u.to_vec())?);
        }
        Ok(())
    };
    take(0, &state.u_prev)?;
    take(1, &state.u_curr)?;
    let (mut newton_max, mut newton_total) = (0, 0);
    for step in 2..=stepper.n_steps() {
        let (next, report) = stepper.step(&state.u_prev, &state.u_curr, step)?;
        newton_max = newton_max.max(report.iterations);
        newton_total += report.iterations;
        max_abs = track(&next, max_abs);
        take(step, &next)?;
        state.u_prev = std::mem::replace(&mut state.u_curr, next);
        state.step = step;
    }
    Ok(SolitonRun {
        h: mesh.mesh_size(),
        dofs: mesh.n_vertices(),
        snapshots,
        newton_max,
        newton_total,
        max_abs,
        seconds: if cfg.timing { clock.elapsed().as_secs_f64() } else { 0.0 },
    })
}

/// Files written and checks evaluated by [`run_experiment`].
#[derive(Debug)]
pub struct ExperimentSummary {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

fn write_file(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> Result<(), HarnessError> {
    let err = |source| HarnessError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(err)?);
    f(&mut w).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Runs the configured experiment, writes its tables or fields into
/// `output_dir` together with `config.toml` (the resolved configuration,
/// including seed and Lloyd count), and evaluates the acceptance checks.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, HarnessError> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    let name = cfg.test.name();
    let mut files = Vec::new();
    let checks = match cfg.test {
        TestId::Test1 | TestId::Test3 => {
            let records = if cfg.test == TestId::Test1 { run_test1(cfg)? } else { run_test3(cfg)? };
            let path = dir.join(format!("{name}.csv"));
            emit_csv(&records, &path, cfg.timing)?;
            files.push(path);
            if cfg.test == TestId::Test1 {
                check_test1(&records)
            } else {
                check_test3(&records)
            }
        }
        TestId::Test2 => {
            let rows = run_test2(cfg)?;
            let path = dir.join(format!("{name}.csv"));
            write_file(&path, |w| write_comparison_to(&rows, w))?;
            files.push(path);
            check_test2(&rows, cfg.timing)
        }
        TestId::Solitons => {
            let run = run_solitons(cfg)?;
            for (quarter, full) in run.snapshots.iter().zip(run.reflected()) {
                let q = dir.join(format!("{name}_t{}.vtk", quarter.t));
                let f = dir.join(format!("{name}_full_t{}.vtk", quarter.t));
                emit_field(quarter, &q)?;
                emit_field(&full, &f)?;
                files.extend([q, f]);
            }
            check_solitons(&run, &cfg.snapshot_times)
        }
    };
    let meta = dir.join("config.toml");
    write_file(&meta, |w| std::io::Write::write_all(w, cfg.to_toml_string().as_bytes()))?;
    files.push(meta);
    Ok(ExperimentSummary { files, checks })
}
