use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use sgvem::geometry::{polygon_centroid, signed_area, Point2, Rect};
use sgvem::harness::FieldSnapshot;
use sgvem::linalg::{solve, CsrMatrix, DenseMatrix, SolverConfig};
use sgvem::mesh::generate_voronoi;
use sgvem::norms::{fitted_rate, rate};
use sgvem::vem_local::{build_operators_for_polygon, local_matrices};

/// Convex polygon from sorted angles on an ellipse.
fn polygon() -> impl Strategy<Value = Vec<Point2<f64>>> {
    (
        prop::collection::btree_set(0u32..3600, 3..10),
        0.2f64..3.0,
        0.3f64..1.0,
        -5.0f64..5.0,
        -5.0f64..5.0,
        0.0f64..3.2,
    )
        .prop_map(|(angles, scale, aspect, cx, cy, rot)| {
            angles
                .into_iter()
                .map(|a| {
                    let t = a as f64 * std::f64::consts::PI / 1800.0;
                    let (x, y) = (scale * t.cos(), scale * aspect * t.sin());
                    Point2::new(cx + x * rot.cos() - y * rot.sin(), cy + x * rot.sin() + y * rot.cos())
                })
                .collect()
        })
        .prop_filter("not too thin", |p: &Vec<Point2<f64>>| {
            let n = p.len();
            let min_edge = (0..n).map(|i| p[i].distance(p[(i + 1) % n])).fold(f64::INFINITY, f64::min);
            let diam = p.iter().flat_map(|a| p.iter().map(move |b| a.distance(*b))).fold(0.0, f64::max);
            min_edge > 1e-3 * diam && signed_area(p) > 1e-2 * diam * diam
        })
}

fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn diameter(p: &[Point2<f64>]) -> f64 {
    p.iter().flat_map(|a| p.iter().map(move |b| a.distance(*b))).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stiffness_kernel_is_exactly_the_constants(poly in polygon()) {
        let ops = build_operators_for_polygon(&poly, signed_area(&poly), polygon_centroid(&poly), diameter(&poly)).unwrap();
        let m = local_matrices(&ops);
        let k = to_na(&m.stiffness);
        prop_assert!((&k - k.transpose()).abs().max() < 1e-12 * k.abs().max());
        let eig = SymmetricEigen::new(k.clone()).eigenvalues;
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let top = ev[ev.len() - 1];
        prop_assert!(ev[0].abs() < 1e-10 * top);
        prop_assert!(ev[1] > 1e-8 * top, "second eigenvalue {} vs {}", ev[1], top);
        let ones = DVector::from_element(poly.len(), 1.0);
        prop_assert!((&k * ones).amax() < 1e-11 * top);
    }

    #[test]
    fn mass_is_positive_definite_and_integrates_one(poly in polygon()) {
        let area = signed_area(&poly);
        let ops = build_operators_for_polygon(&poly, area, polygon_centroid(&poly), diameter(&poly)).unwrap();
        let m = local_matrices(&ops);
        let mm = to_na(&m.mass);
        let ev = SymmetricEigen::new(mm.clone()).eigenvalues;
        prop_assert!(ev.min() > 0.0);
        prop_assert!((mm.sum() - area).abs() < 1e-10 * area);
        // the projected mass only sees the projection: rank 3
        let rank = SymmetricEigen::new(to_na(&m.projected_mass)).eigenvalues.iter().filter(|&&e| e > 1e-10 * area).count();
        prop_assert_eq!(rank, 3.min(poly.len()));
    }

    #[test]
    fn solver_agrees_with_dense_lu(n in 5usize..40, seed in 0u64..1000) {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let dense = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j { 4.0 } else if (i as i64 - j as i64).abs() <= 2 { next() } else { 0.0 }
        });
        let b: Vec<f64> = (0..n).map(|_| next()).collect();
        let (x, _) = solve(&CsrMatrix::from_dense(&dense), &b, &SolverConfig::default()).unwrap();
        let reference = to_na(&dense).lu().solve(&DVector::from_vec(b)).unwrap();
        for (a, r) in x.iter().zip(reference.iter()) {
            prop_assert!((a - r).abs() < 1e-9);
        }
    }

    #[test]
    fn rates_recover_power_laws(p in 0.5f64..3.0, c in 1e-4f64..10.0) {
        let h: [f64; 4] = [0.4, 0.2, 0.11, 0.05];
        let e: Vec<f64> = h.iter().map(|x| c * x.powf(p)).collect();
        prop_assert!((rate(e[0], e[1], h[0], h[1]) - p).abs() < 1e-10);
        prop_assert!((fitted_rate(&h, &e).unwrap() - p).abs() < 1e-10);
    }

    #[test]
    fn reflection_preserves_values_and_orientation(seed in 0u64..50) {
        let mesh = generate_voronoi::<f64>(Rect::new(-10.0, 10.0, -7.0, 7.0), 30, 2, seed).unwrap();
        let values: Vec<f64> = mesh.vertices().iter().map(|p| p.x * 0.1 + p.y.sin()).collect();
        let field = FieldSnapshot::from_mesh(&mesh, 0.0, values).unwrap();
        let full = field.reflect(-10.0, -10.0);
        prop_assert_eq!(full.values.len(), 4 * field.values.len());
        prop_assert_eq!(full.max_abs(), field.max_abs());
        for poly in &full.polygons {
            let pts: Vec<Point2<f64>> = poly.iter().map(|&i| full.points[i]).collect();
            prop_assert!(signed_area(&pts) > 0.0);
        }
    }
}
