//! Polygonal meshes of a rectangle: data structures, validation, generators and a text format.

mod io;
mod quality;
mod structured;
mod voronoi;

use thiserror::Error;

use crate::geometry::{is_simple, polygon_centroid, signed_area, Point2, Rect};
use crate::scalar::Scalar;

pub use io::{read_mesh, read_mesh_from, write_mesh, write_mesh_to};
pub use quality::{check_regularity, MeshQualityReport};
pub use structured::{generate_distorted_quads, generate_nonconvex, generate_structured_triangles};
pub use voronoi::{generate_voronoi, voronoi_from_seeds};

/// Why a single polygon was rejected.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CellDefect {
    #[error("fewer than 3 vertices")]
    TooFewVertices,
    #[error("vertex index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("repeated consecutive vertex {0}")]
    RepeatedVertex(usize),
    #[error("vertices are not counter-clockwise (signed area <= 0)")]
    NotCounterClockwise,
    #[error("polygon boundary intersects itself")]
    SelfIntersecting,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate domain rectangle")]
    DegenerateRect,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex {vertex} has non-finite coordinates")]
    NonFiniteVertex { vertex: usize },
    #[error("cell {cell}: {defect}")]
    BadCell { cell: usize, defect: CellDefect },
    #[error("distortion inverted cell {cell}")]
    InvertedCell { cell: usize },
    #[error("cells do not tile the domain: area sum {area_sum}, domain area {domain_area}")]
    TilingMismatch { area_sum: f64, domain_area: f64 },
    #[error("boundary flag of vertex {vertex} does not match its position")]
    BoundaryFlagMismatch { vertex: usize },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Area, centroid and diameter of a polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGeometry<T> {
    pub area: T,
    pub centroid: Point2<T>,
    pub diameter: T,
}

/// One polygonal element with counter-clockwise vertex ids and cached geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonCell<T> {
    pub vertex_ids: Vec<usize>,
    pub area: T,
    pub centroid: Point2<T>,
    /// Maximum distance between two vertices (`h_K`).
    pub diameter: T,
}

impl<T> PolygonCell<T> {
    pub fn n_vertices(&self) -> usize {
        self.vertex_ids.len()
    }
}

/// Shoelace area, polygon centroid and vertex diameter of the cell `ids`.
pub fn cell_geometry<T: Scalar>(vertices: &[Point2<T>], ids: &[usize]) -> Result<CellGeometry<T>, CellDefect> {
    if ids.len() < 3 {
        return Err(CellDefect::TooFewVertices);
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= vertices.len()) {
        return Err(CellDefect::IndexOutOfRange(bad));
    }
    for k in 0..ids.len() {
        if ids[k] == ids[(k + 1) % ids.len()] {
            return Err(CellDefect::RepeatedVertex(ids[k]));
        }
    }
    let poly: Vec<Point2<T>> = ids.iter().map(|&i| vertices[i]).collect();
    let area = signed_area(&poly);
    if !(area > T::zero()) {
        return Err(CellDefect::NotCounterClockwise);
    }
    if !is_simple(&poly) {
        return Err(CellDefect::SelfIntersecting);
    }
    let mut diameter = T::zero();
    for i in 0..poly.len() {
        for j in (i + 1)..poly.len() {
            diameter = diameter.max(poly[i].distance(poly[j]));
        }
    }
    Ok(CellGeometry { area, centroid: polygon_centroid(&poly), diameter })
}

/// A conforming or non-conforming polygonal decomposition of a rectangle.
///
/// Immutable after construction; every constructor validates the invariants
/// (valid indices, CCW simple cells, boundary flags, tiling).
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonalMesh<T> {
    vertices: Vec<Point2<T>>,
    cells: Vec<PolygonCell<T>>,
    boundary_vertex_flags: Vec<bool>,
    domain_rect: Rect<T>,
    mesh_size: T,
}

impl<T: Scalar> PolygonalMesh<T> {
    /// Validates the connectivity and derives boundary flags from `domain_rect`.
    pub fn new(vertices: Vec<Point2<T>>, cells: Vec<Vec<usize>>, domain_rect: Rect<T>) -> Result<Self, MeshError> {
        if domain_rect.is_degenerate() {
            return Err(MeshError::DegenerateRect);
        }
        if let Some(v) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFiniteVertex { vertex: v });
        }
        let boundary_vertex_flags = vertices.iter().map(|&p| domain_rect.on_boundary(p)).collect();
        let mut out = Vec::with_capacity(cells.len());
        let mut mesh_size = T::zero();
        let mut area_sum = T::zero();
        for (k, ids) in cells.into_iter().enumerate() {
            let g = cell_geometry(&vertices, &ids).map_err(|defect| MeshError::BadCell { cell: k, defect })?;
            mesh_size = mesh_size.max(g.diameter);
            area_sum += g.area;
            out.push(PolygonCell { vertex_ids: ids, area: g.area, centroid: g.centroid, diameter: g.diameter });
        }
        let domain_area = domain_rect.area();
        if out.is_empty() || (area_sum - domain_area).abs() > T::rounding_tol() * domain_area {
            return Err(MeshError::TilingMismatch {
                area_sum: area_sum.to_f64_lossy(),
                domain_area: domain_area.to_f64_lossy(),
            });
        }
        Ok(Self { vertices, cells: out, boundary_vertex_flags, domain_rect, mesh_size })
    }

    /// Like [`PolygonalMesh::new`], additionally checking supplied boundary flags.
    pub fn with_flags(
        vertices: Vec<Point2<T>>,
        cells: Vec<Vec<usize>>,
        flags: &[bool],
        domain_rect: Rect<T>,
    ) -> Result<Self, MeshError> {
        let mesh = Self::new(vertices, cells, domain_rect)?;
        if let Some(v) = mesh.boundary_vertex_flags.iter().zip(flags).position(|(a, b)| a != b) {
            return Err(MeshError::BoundaryFlagMismatch { vertex: v });
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[PolygonCell<T>] {
        &self.cells
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex_flags
    }

    pub fn domain_rect(&self) -> Rect<T> {
        self.domain_rect
    }

    /// `h = max_K h_K`
    pub fn mesh_size(&self) -> T {
        self.mesh_size
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, k: usize) -> Vec<Point2<T>> {
        self.cells[k].vertex_ids.iter().map(|&i| self.vertices[i]).collect()
    }

    pub fn total_area(&self) -> T {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| self.boundary_vertex_flags[i]).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| !self.boundary_vertex_flags[i]).collect()
    }

    /// Every interior edge is shared by exactly two cells with opposite
    /// orientation and every unshared edge lies on the domain boundary.
    pub fn is_conforming(&self) -> bool {
        use std::collections::HashMap;
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for c in &self.cells {
            let n = c.vertex_ids.len();
            for k in 0..n {
                let (a, b) = (c.vertex_ids[k], c.vertex_ids[(k + 1) % n]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        edges.iter().all(|(&(a, b), &count)| {
            if count != 1 {
                return false;
            }
            edges.contains_key(&(b, a)) || self.is_boundary_edge(a, b)
        })
    }

    fn is_boundary_edge(&self, a: usize, b: usize) -> bool {
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let r = self.domain_rect;
        (p.x == r.xmin && q.x == r.xmin)
            || (p.x == r.xmax && q.x == r.xmax)
            || (p.y == r.ymin && q.y == r.ymin)
            || (p.y == r.ymax && q.y == r.ymax)
    }

    /// Whether cell `k` has an interior angle larger than pi.
    pub fn cell_has_reflex_vertex(&self, k: usize) -> bool {
        let pts = self.cell_points(k);
        let n = pts.len();
        (0..n).any(|i| {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            (pts[i] - prev).cross(next - pts[i]) < T::zero()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point2<f64>> {
        coords.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn unit_square_geometry() {
        let v = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let g = cell_geometry(&v, &[0, 1, 2, 3]).unwrap();
        assert_eq!(g.area, 1.0);
        assert!((g.centroid.x - 0.5).abs() < 1e-15 && (g.centroid.y - 0.5).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_geometry() {
        let v = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let g = cell_geometry(&v, &[0, 1, 2]).unwrap();
        assert_eq!(g.area, 0.5);
        assert!((g.centroid.x - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.centroid.y - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn l_shaped_hexagon_geometry() {
        // shoelace by hand: 2*A = 0*0-2*0 + 2*1-2*0 + 2*1-1*1 + 1*2-1*1 + 1*2-0*2 + 0*0-0*2 = 6
        let v = pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
        let g = cell_geometry(&v, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert!((g.area - 3.0).abs() < 1e-14);
        assert!((g.diameter - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        // union of [0,2]x[0,1] (centroid (1, 0.5), area 2) and [0,1]x[1,2] (centroid (0.5, 1.5), area 1)
        assert!((g.centroid.x - 2.5 / 3.0).abs() < 1e-14);
        assert!((g.centroid.y - 2.5 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn clockwise_and_self_intersecting_cells_are_rejected() {
        let v = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(cell_geometry(&v, &[0, 3, 2, 1]), Err(CellDefect::NotCounterClockwise));
        let v = pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (1.5, -1.0), (0.0, 1.0)]);
        assert_eq!(cell_geometry(&v, &[0, 1, 2, 3, 4]), Err(CellDefect::SelfIntersecting));
        assert_eq!(cell_geometry(&v, &[0, 1]), Err(CellDefect::TooFewVertices));
        assert_eq!(cell_geometry(&v, &[0, 1, 1, 2]), Err(CellDefect::RepeatedVertex(1)));
        assert_eq!(cell_geometry(&v, &[0, 1, 9]), Err(CellDefect::IndexOutOfRange(9)));
    }

    #[test]
    fn mesh_rejects_gaps() {
        let v = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let err = PolygonalMesh::new(v, vec![vec![0, 1, 2]], Rect::unit()).unwrap_err();
        assert!(matches!(err, MeshError::TilingMismatch { .. }));
    }

    #[test]
    fn boundary_flags_follow_geometry() {
        let v = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]);
        let cells = vec![vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![3, 0, 4]];
        let mesh = PolygonalMesh::new(v, cells, Rect::unit()).unwrap();
        assert_eq!(mesh.boundary_vertex_flags(), &[true, true, true, true, false]);
        assert!(mesh.is_conforming());
        assert_eq!(mesh.interior_vertices(), vec![4]);
    }
}
