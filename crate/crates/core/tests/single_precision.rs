//! The solver stack instantiated at `f32`.

use sgvem::assembly::{assemble_discretization, interpolate, BoundaryData};
use sgvem::geometry::Rect;
use sgvem::mesh::generate_voronoi;
use sgvem::nonlinear::{NewtonConfig, Nonlinearity};
use sgvem::norms::relative_l2;
use sgvem::timestepper::{InitialData, SchemeParams, Stepper};

#[test]
fn f32_oscillation_tracks_f64() {
    fn run<T: sgvem::Scalar>(tol: f64) -> (Vec<f64>, f64) {
        let mesh = generate_voronoi::<T>(Rect::unit(), 120, 5, 2).unwrap();
        let disc = assemble_discretization(&mesh).unwrap();
        let pi = T::lit(std::f64::consts::PI);
        let params = SchemeParams::new(T::lit(0.05), T::lit(0.5), Nonlinearity::sine_gordon(), BoundaryData::homogeneous_dirichlet())
            .with_newton(NewtonConfig { tol_residual: tol, ..NewtonConfig::default() });
        let init = InitialData::new(|_, _| T::zero(), move |x: T, y: T| (pi * x).sin() * (pi * y).sin());
        let mut stepper = Stepper::new(&params, &mesh, &disc).unwrap();
        let traj = stepper.run(&init, &[]).unwrap();
        let u = traj.final_solution();
        let reference = interpolate(|x: T, y: T| (pi * x).sin() * (pi * y).sin() * T::lit(0.5f64.sin()), &mesh);
        let err = relative_l2(&disc.system, &reference, u).unwrap().to_f64_lossy();
        (u.iter().map(|v| v.to_f64_lossy()).collect(), err)
    }
    let (single, e32) = run::<f32>(1e-5);
    let (double, e64) = run::<f64>(1e-10);
    let diff = single.iter().zip(&double).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = double.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.1);
    assert!(diff < 1e-4 * scale.max(1.0), "f32 and f64 differ by {diff}");
    assert!((e32 - e64).abs() < 1e-3, "{e32} vs {e64}");
}
