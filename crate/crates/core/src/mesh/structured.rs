//! Grid-based mesh families: distorted quadrilaterals, zigzag-split concave
//! hexagons and right triangles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cell_geometry, MeshError, PolygonalMesh};
use crate::geometry::{Point2, Rect};
use crate::scalar::Scalar;

fn check_counts(nx: usize, ny: usize, min: usize) -> Result<(), MeshError> {
    if nx < min || ny < min {
        return Err(MeshError::InvalidParameter(format!("grid needs at least {min}x{min} cells, got {nx}x{ny}")));
    }
    Ok(())
}

/// Coordinate `i` of `n` uniform subdivisions of `[lo, hi]`, exact at both ends.
fn lerp<T: Scalar>(lo: T, hi: T, i: usize, n: usize) -> T {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n)
    }
}

fn grid_nodes<T: Scalar>(rect: Rect<T>, nx: usize, ny: usize) -> Vec<Point2<T>> {
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point2::new(lerp(rect.xmin, rect.xmax, i, nx), lerp(rect.ymin, rect.ymax, j, ny)));
        }
    }
    nodes
}

/// `nx × ny` quadrilaterals whose interior nodes are moved by up to
/// `distortion` times the cell width (and height) in each direction.
pub fn generate_distorted_quads<T: Scalar>(
    rect: Rect<T>,
    nx: usize,
    ny: usize,
    distortion: T,
    rng_seed: u64,
) -> Result<PolygonalMesh<T>, MeshError> {
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect);
    }
    check_counts(nx, ny, 2)?;
    if !(distortion >= T::zero() && distortion < T::lit(0.5)) {
        return Err(MeshError::InvalidParameter(format!("distortion {distortion} not in [0, 0.5)")));
    }
    let mut nodes = grid_nodes(rect, nx, ny);
    if distortion > T::zero() {
        let hx = rect.width() / T::from_usize_lossy(nx);
        let hy = rect.height() / T::from_usize_lossy(ny);
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for j in 1..ny {
            for i in 1..nx {
                let u: f64 = rng.gen_range(-1.0..1.0);
                let v: f64 = rng.gen_range(-1.0..1.0);
                let p = &mut nodes[j * (nx + 1) + i];
                p.x += distortion * hx * T::lit(u);
                p.y += distortion * hy * T::lit(v);
            }
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let ids = vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            if cell_geometry(&nodes, &ids).is_err() {
                return Err(MeshError::InvertedCell { cell: cells.len() });
            }
            cells.push(ids);
        }
    }
    PolygonalMesh::new(nodes, cells, rect)
}

/// Each of the `nx × ny` grid squares is cut into two congruent concave
/// hexagons by a point-symmetric zigzag through the midpoints of its
/// vertical sides.
pub fn generate_nonconvex<T: Scalar>(rect: Rect<T>, nx: usize, ny: usize) -> Result<PolygonalMesh<T>, MeshError> {
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect);
    }
    check_counts(nx, ny, 1)?;
    let mut vertices = grid_nodes(rect, nx, ny);
    let corner = |i: usize, j: usize| j * (nx + 1) + i;

    let mid_base = vertices.len();
    for j in 0..ny {
        for i in 0..=nx {
            let y0 = lerp(rect.ymin, rect.ymax, j, ny);
            let y1 = lerp(rect.ymin, rect.ymax, j + 1, ny);
            vertices.push(Point2::new(lerp(rect.xmin, rect.xmax, i, nx), (y0 + y1) * T::lit(0.5)));
        }
    }
    let mid = |i: usize, j: usize| mid_base + j * (nx + 1) + i;

    // zigzag bends at 1/3 and 2/3 of the width, displaced by +-0.2 of the height
    let (third, amp) = (T::lit(1.0 / 3.0), T::lit(0.2));
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x0 = lerp(rect.xmin, rect.xmax, i, nx);
            let x1 = lerp(rect.xmin, rect.xmax, i + 1, nx);
            let y0 = lerp(rect.ymin, rect.ymax, j, ny);
            let y1 = lerp(rect.ymin, rect.ymax, j + 1, ny);
            let (w, h) = (x1 - x0, y1 - y0);
            let yc = (y0 + y1) * T::lit(0.5);
            let z1 = vertices.len();
            vertices.push(Point2::new(x0 + w * third, yc + h * amp));
            let z2 = vertices.len();
            vertices.push(Point2::new(x1 - w * third, yc - h * amp));
            cells.push(vec![corner(i, j), corner(i + 1, j), mid(i + 1, j), z2, z1, mid(i, j)]);
            cells.push(vec![mid(i, j), z1, z2, mid(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)]);
        }
    }
    PolygonalMesh::new(vertices, cells, rect)
}

/// Structured right-triangle mesh: every grid square split along its
/// lower-left to upper-right diagonal.
pub fn generate_structured_triangles<T: Scalar>(
    rect: Rect<T>,
    nx: usize,
    ny: usize,
) -> Result<PolygonalMesh<T>, MeshError> {
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect);
    }
    check_counts(nx, ny, 1)?;
    let nodes = grid_nodes(rect, nx, ny);
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            cells.push(vec![idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    PolygonalMesh::new(nodes, cells, rect)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distortion_is_uniform_grid() {
        let mesh = generate_distorted_quads::<f64>(Rect::unit(), 4, 4, 0.0, 99).unwrap();
        assert_eq!(mesh.n_cells(), 16);
        for c in mesh.cells() {
            assert!((c.area - 1.0 / 16.0).abs() < 1e-15);
            assert!((c.diameter - 0.25 * 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn distortion_keeps_boundary_and_tiling() {
        let mesh = generate_distorted_quads::<f64>(Rect::unit(), 4, 4, 0.3, 7).unwrap();
        assert_eq!(mesh.n_cells(), 16);
        assert!((mesh.total_area() - 1.0).abs() < 1e-10);
        let grid = generate_distorted_quads::<f64>(Rect::unit(), 4, 4, 0.0, 7).unwrap();
        for v in mesh.boundary_vertices() {
            assert_eq!(mesh.vertices()[v], grid.vertices()[v]);
        }
        assert_eq!(mesh.boundary_vertices(), grid.boundary_vertices());
        assert!(mesh.is_conforming());
    }

    #[test]
    fn strong_distortion_never_yields_a_bad_mesh() {
        for seed in 0..50 {
            match generate_distorted_quads::<f64>(Rect::unit(), 4, 4, 0.49, seed) {
                Ok(mesh) => {
                    for k in 0..mesh.n_cells() {
                        let pts = mesh.cell_points(k);
                        assert!(crate::geometry::signed_area(&pts) > 0.0);
                        assert!(crate::geometry::is_simple(&pts));
                    }
                }
                Err(MeshError::InvertedCell { cell }) => assert!(cell < 16),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn distortion_range_is_validated() {
        assert!(generate_distorted_quads::<f64>(Rect::unit(), 4, 4, 0.5, 0).is_err());
        assert!(generate_distorted_quads::<f64>(Rect::unit(), 1, 4, 0.1, 0).is_err());
    }

    #[test]
    fn single_square_splits_into_two_congruent_concave_cells() {
        let rect = Rect::from_f64(-1.0, 3.0, 0.0, 2.0);
        let mesh = generate_nonconvex::<f64>(rect, 1, 1).unwrap();
        assert_eq!(mesh.n_cells(), 2);
        for (k, c) in mesh.cells().iter().enumerate() {
            assert!((c.area - 4.0).abs() < 1e-14);
            assert!(mesh.cell_has_reflex_vertex(k));
        }
    }

    #[test]
    fn nonconvex_cells_all_have_a_reflex_angle() {
        let mesh = generate_nonconvex::<f64>(Rect::unit(), 4, 4).unwrap();
        assert_eq!(mesh.n_cells(), 32);
        for k in 0..mesh.n_cells() {
            // angle scan: some turn at a vertex goes clockwise
            let pts = mesh.cell_points(k);
            let n = pts.len();
            let reflex = (0..n)
                .filter(|&i| (pts[i] - pts[(i + n - 1) % n]).cross(pts[(i + 1) % n] - pts[i]) < 0.0)
                .count();
            assert!(reflex >= 1, "cell {k}");
        }
        assert!(mesh.is_conforming());
    }

    #[test]
    fn nonconvex_boundary_flags_are_perimeter_only() {
        let mesh = generate_nonconvex::<f64>(Rect::unit(), 2, 2).unwrap();
        for (v, &flag) in mesh.boundary_vertex_flags().iter().enumerate() {
            let p = mesh.vertices()[v];
            let on_edge = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
            assert_eq!(flag, on_edge, "vertex {v} at {p:?}");
        }
        // 9 corners of which 8 on the boundary, plus 4 of the 6 side midpoints
        assert_eq!(mesh.boundary_vertices().len(), 12);
    }

    #[test]
    fn triangles_tile() {
        let mesh = generate_structured_triangles::<f64>(Rect::from_f64(-7.0, 7.0, -7.0, 7.0), 10, 10).unwrap();
        assert_eq!(mesh.n_cells(), 200);
        assert!((mesh.total_area() - 196.0).abs() < 1e-10);
        assert!(mesh.is_conforming());
    }
}
