//! Shape-regularity diagnostics.

use super::PolygonalMesh;
use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Worst-case shape constants over a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQualityReport<T> {
    /// Smallest ratio between the radius of a ball the cell is star-shaped
    /// with respect to and the cell diameter (sampled lower bound).
    pub min_star_ratio: T,
    /// Smallest ratio between the shortest vertex-to-vertex distance and the cell diameter.
    pub min_edge_ratio: T,
    /// Cell attaining the smallest of the two ratios.
    pub worst_cell_id: usize,
}

/// Radius of the largest ball centred at `p` that lies in every inner
/// half-plane of the CCW polygon, i.e. inside its kernel. Non-positive when
/// `p` is not in the kernel.
fn kernel_radius<T: Scalar>(poly: &[Point2<T>], p: Point2<T>) -> T {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let e = poly[(i + 1) % n] - a;
            e.cross(p - a) / e.norm()
        })
        .fold(T::infinity(), T::min)
}

fn star_radius<T: Scalar>(poly: &[Point2<T>], centroid: Point2<T>) -> T {
    let mut best = kernel_radius(poly, centroid);
    let n = T::from_usize_lossy(poly.len());
    let vertex_mean = poly.iter().fold(Point2::default(), |acc, &p| acc + p) * (T::one() / n);
    best = best.max(kernel_radius(poly, vertex_mean));
    for &v in poly {
        best = best.max(kernel_radius(poly, centroid.midpoint(v)));
    }
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    const SAMPLES: usize = 9;
    for i in 1..SAMPLES {
        for j in 1..SAMPLES {
            let s = T::from_usize_lossy(i) / T::from_usize_lossy(SAMPLES);
            let t = T::from_usize_lossy(j) / T::from_usize_lossy(SAMPLES);
            let p = Point2::new(lo.x + (hi.x - lo.x) * s, lo.y + (hi.y - lo.y) * t);
            best = best.max(kernel_radius(poly, p));
        }
    }
    best.max(T::zero())
}

pub fn check_regularity<T: Scalar>(mesh: &PolygonalMesh<T>) -> MeshQualityReport<T> {
    let mut report = MeshQualityReport { min_star_ratio: T::one(), min_edge_ratio: T::one(), worst_cell_id: 0 };
    let mut worst = T::infinity();
    for (k, cell) in mesh.cells().iter().enumerate() {
        let poly = mesh.cell_points(k);
        let mut shortest = T::infinity();
        for i in 0..poly.len() {
            for j in (i + 1)..poly.len() {
                shortest = shortest.min(poly[i].distance(poly[j]));
            }
        }
        let edge_ratio = shortest / cell.diameter;
        let star_ratio = star_radius(&poly, cell.centroid) / cell.diameter;
        report.min_edge_ratio = report.min_edge_ratio.min(edge_ratio);
        report.min_star_ratio = report.min_star_ratio.min(star_ratio);
        if edge_ratio.min(star_ratio) < worst {
            worst = edge_ratio.min(star_ratio);
            report.worst_cell_id = k;
        }
    }
    report
}
