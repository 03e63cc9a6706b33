//! Clipped Voronoi tessellations of a rectangle with optional Lloyd smoothing.
//!
//! Each cell is built independently by clipping the rectangle against the
//! bisectors of nearby seeds. Neighbours are visited ring by ring on a bucket
//! grid until the security radius (twice the farthest cell vertex) is covered,
//! so the cost is linear in the number of seeds. Shared vertices computed by
//! different cells are merged afterwards on a hash grid.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MeshError, PolygonalMesh};
use crate::geometry::{polygon_centroid, Point2, Rect};
use crate::scalar::Scalar;

/// Voronoi mesh of `n_cells` uniformly random seeds, smoothed by `lloyd_iterations`
/// centroid updates. The result is a deterministic function of all arguments.
pub fn generate_voronoi<T: Scalar>(
    rect: Rect<T>,
    n_cells: usize,
    lloyd_iterations: usize,
    rng_seed: u64,
) -> Result<PolygonalMesh<T>, MeshError> {
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds = (0..n_cells)
        .map(|_| {
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            Point2::new(rect.xmin + rect.width() * T::lit(u), rect.ymin + rect.height() * T::lit(v))
        })
        .collect();
    voronoi_from_seeds(rect, seeds, lloyd_iterations)
}

/// Voronoi mesh of explicit seeds (all strictly inside `rect`).
pub fn voronoi_from_seeds<T: Scalar>(
    rect: Rect<T>,
    mut seeds: Vec<Point2<T>>,
    lloyd_iterations: usize,
) -> Result<PolygonalMesh<T>, MeshError> {
    if rect.is_degenerate() {
        return Err(MeshError::DegenerateRect);
    }
    if seeds.len() < 4 {
        return Err(MeshError::InvalidParameter(format!(
            "at least 4 seeds are needed, got {}",
            seeds.len()
        )));
    }
    if seeds
        .iter()
        .any(|p| !p.is_finite() || p.x < rect.xmin || p.x > rect.xmax || p.y < rect.ymin || p.y > rect.ymax)
    {
        return Err(MeshError::InvalidParameter("seed outside the domain".into()));
    }
    let mut cells = voronoi_cells(rect, &seeds);
    for _ in 0..lloyd_iterations {
        for (s, poly) in seeds.iter_mut().zip(&cells) {
            if poly.len() >= 3 {
                *s = polygon_centroid(poly);
            }
        }
        cells = voronoi_cells(rect, &seeds);
    }
    merge_cells(rect, &cells)
}

struct SeedGrid<T> {
    rect: Rect<T>,
    nx: usize,
    ny: usize,
    dx: T,
    dy: T,
    buckets: Vec<Vec<usize>>,
}

impl<T: Scalar> SeedGrid<T> {
    fn new(rect: Rect<T>, seeds: &[Point2<T>]) -> Self {
        let side = (rect.area() / T::from_usize_lossy(seeds.len())).sqrt();
        let count = |len: T| (len / side).ceil().to_usize().unwrap_or(1).clamp(1, 1 << 12);
        let (nx, ny) = (count(rect.width()), count(rect.height()));
        let dx = rect.width() / T::from_usize_lossy(nx);
        let dy = rect.height() / T::from_usize_lossy(ny);
        let mut grid = Self { rect, nx, ny, dx, dy, buckets: vec![Vec::new(); nx * ny] };
        for (i, &s) in seeds.iter().enumerate() {
            let (bx, by) = grid.bucket_of(s);
            grid.buckets[by * nx + bx].push(i);
        }
        grid
    }

    fn bucket_of(&self, p: Point2<T>) -> (usize, usize) {
        let bx = ((p.x - self.rect.xmin) / self.dx).floor().to_usize().unwrap_or(0).min(self.nx - 1);
        let by = ((p.y - self.rect.ymin) / self.dy).floor().to_usize().unwrap_or(0).min(self.ny - 1);
        (bx, by)
    }

    /// Lower bound on the distance from `p` (in bucket `(bx, by)`) to any seed
    /// outside the square of buckets within Chebyshev distance `ring`.
    /// `None` once that square covers the whole grid.
    fn unvisited_distance(&self, p: Point2<T>, bx: usize, by: usize, ring: usize) -> Option<T> {
        let mut d: Option<T> = None;
        let mut consider = |v: T| d = Some(d.map_or(v, |x: T| x.min(v)));
        if bx > ring {
            consider(p.x - (self.rect.xmin + self.dx * T::from_usize_lossy(bx - ring)));
        }
        if bx + ring + 1 < self.nx {
            consider(self.rect.xmin + self.dx * T::from_usize_lossy(bx + ring + 1) - p.x);
        }
        if by > ring {
            consider(p.y - (self.rect.ymin + self.dy * T::from_usize_lossy(by - ring)));
        }
        if by + ring + 1 < self.ny {
            consider(self.rect.ymin + self.dy * T::from_usize_lossy(by + ring + 1) - p.y);
        }
        d
    }

    fn ring_buckets(&self, bx: usize, by: usize, ring: usize) -> impl Iterator<Item = &[usize]> + '_ {
        let (bx, by, r) = (bx as isize, by as isize, ring as isize);
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        (by - r..=by + r).flat_map(move |j| {
            (bx - r..=bx + r).filter_map(move |i| {
                let on_ring = (i - bx).abs() == r || (j - by).abs() == r;
                (on_ring && i >= 0 && j >= 0 && i < nx && j < ny).then(|| self.buckets[(j * nx + i) as usize].as_slice())
            })
        })
    }
}

fn voronoi_cells<T: Scalar>(rect: Rect<T>, seeds: &[Point2<T>]) -> Vec<Vec<Point2<T>>> {
    let grid = SeedGrid::new(rect, seeds);
    let dedup_tol = rect.snap_tol() * T::lit(1e-3);
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut poly: Vec<Point2<T>> = rect.corners().to_vec();
            let (bx, by) = grid.bucket_of(s);
            let mut ring = 0;
            loop {
                for bucket in grid.ring_buckets(bx, by, ring) {
                    for &j in bucket {
                        if j != i && seeds[j] != s {
                            poly = clip_by_bisector(&poly, s, seeds[j], dedup_tol);
                        }
                    }
                }
                let reach = poly.iter().map(|&p| p.distance(s)).fold(T::zero(), T::max);
                match grid.unvisited_distance(s, bx, by, ring) {
                    Some(d) if d < reach + reach => ring += 1,
                    _ => break,
                }
            }
            poly
        })
        .collect()
}

/// Keeps the part of convex `poly` closer to `seed` than to `other`.
fn clip_by_bisector<T: Scalar>(poly: &[Point2<T>], seed: Point2<T>, other: Point2<T>, tol: T) -> Vec<Point2<T>> {
    let normal = other - seed;
    let mid = seed.midpoint(other);
    let side: Vec<T> = poly.iter().map(|&p| (p - mid).dot(normal)).collect();
    if side.iter().all(|&v| v <= T::zero()) {
        return poly.to_vec();
    }
    let n = poly.len();
    let mut out: Vec<Point2<T>> = Vec::with_capacity(n + 1);
    let push = |p: Point2<T>, out: &mut Vec<Point2<T>>| {
        if out.last().is_none_or(|&q| q.distance(p) > tol) {
            out.push(p);
        }
    };
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let (sp, sq) = (side[k], side[(k + 1) % n]);
        let p_in = sp <= T::zero();
        let q_in = sq <= T::zero();
        if p_in {
            push(p, &mut out);
        }
        if p_in != q_in {
            let t = sp / (sp - sq);
            push(p + (q - p) * t, &mut out);
        }
    }
    while out.len() > 1 && out[0].distance(out[out.len() - 1]) <= tol {
        out.pop();
    }
    out
}

/// Merges coincident vertices across cells and builds the validated mesh.
fn merge_cells<T: Scalar>(rect: Rect<T>, cells: &[Vec<Point2<T>>]) -> Result<PolygonalMesh<T>, MeshError> {
    let tol = rect.snap_tol();
    let bucket = tol * T::lit(4.0);
    let key = |p: Point2<T>| {
        (
            ((p.x - rect.xmin) / bucket).floor().to_i64().unwrap_or(0),
            ((p.y - rect.ymin) / bucket).floor().to_i64().unwrap_or(0),
        )
    };
    let mut vertices: Vec<Point2<T>> = Vec::new();
    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut connectivity = Vec::with_capacity(cells.len());
    for poly in cells {
        let mut ids: Vec<usize> = Vec::with_capacity(poly.len());
        for &raw in poly {
            let p = rect.snap(raw);
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = lookup.get(&(kx + dx, ky + dy)) {
                        if let Some(&v) = list.iter().find(|&&v| vertices[v].distance(p) <= tol) {
                            found = Some(v);
                            break 'search;
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                vertices.push(p);
                lookup.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids[0] == ids[ids.len() - 1] {
            ids.pop();
        }
        connectivity.push(ids);
    }
    PolygonalMesh::new(vertices, connectivity, rect)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_seeds_give_four_squares() {
        let seeds = vec![
            Point2::from_f64(0.25, 0.25),
            Point2::from_f64(0.75, 0.25),
            Point2::from_f64(0.25, 0.75),
            Point2::from_f64(0.75, 0.75),
        ];
        let mesh = voronoi_from_seeds::<f64>(Rect::unit(), seeds, 0).unwrap();
        assert_eq!(mesh.n_cells(), 4);
        assert_eq!(mesh.n_vertices(), 9);
        for c in mesh.cells() {
            assert_eq!(c.n_vertices(), 4);
            assert!((c.area - 0.25).abs() < 1e-14);
        }
        assert!(mesh.is_conforming());
    }

    #[test]
    fn too_few_seeds_is_an_error() {
        let seeds = vec![Point2::from_f64(0.2, 0.2), Point2::from_f64(0.8, 0.8)];
        assert!(matches!(voronoi_from_seeds::<f64>(Rect::unit(), seeds, 0), Err(MeshError::InvalidParameter(_))));
        assert!(matches!(generate_voronoi::<f64>(Rect::unit(), 3, 0, 1), Err(MeshError::InvalidParameter(_))));
        let flat = Rect::from_f64(0.0, 1.0, 0.0, 0.0);
        assert!(matches!(generate_voronoi::<f64>(flat, 10, 0, 1), Err(MeshError::DegenerateRect)));
    }

    #[test]
    fn random_voronoi_is_convex_conforming_and_tiles() {
        let mesh = generate_voronoi::<f64>(Rect::unit(), 100, 20, 42).unwrap();
        assert_eq!(mesh.n_cells(), 100);
        assert!((mesh.total_area() - 1.0).abs() < 1e-10);
        assert!(mesh.is_conforming());
        for k in 0..mesh.n_cells() {
            assert!(!mesh.cell_has_reflex_vertex(k), "cell {k} not convex");
        }
        // generic position: V = 2F + 2
        assert_eq!(mesh.n_vertices(), 2 * mesh.n_cells() + 2);
    }

    #[test]
    fn brute_force_agrees_with_bucket_search() {
        // an O(n^2) reference: clip against every other seed
        let rect = Rect::<f64>::from_f64(-2.0, 3.0, 1.0, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seeds: Vec<Point2<f64>> = (0..200)
            .map(|_| Point2::new(-2.0 + 5.0 * rng.gen::<f64>(), 1.0 + 1.5 * rng.gen::<f64>()))
            .collect();
        let fast = voronoi_cells(rect, &seeds);
        for (i, &s) in seeds.iter().enumerate() {
            let mut poly = rect.corners().to_vec();
            for (j, &o) in seeds.iter().enumerate() {
                if j != i {
                    poly = clip_by_bisector(&poly, s, o, 1e-12);
                }
            }
            let a = crate::geometry::signed_area(&poly);
            let b = crate::geometry::signed_area(&fast[i]);
            assert!((a - b).abs() < 1e-12, "cell {i}: {a} vs {b}");
        }
    }
}
