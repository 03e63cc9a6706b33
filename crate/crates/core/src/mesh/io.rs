//! Plain-text mesh format.
//!
//! ```text
//! polymesh 1
//! <vertex count>
//! x y flag          (one line per vertex, flag 1 = on the domain boundary)
//! <cell count>
//! n i1 ... in       (one line per cell, counter-clockwise, 0-based)
//! ```
//!
//! The domain rectangle is the bounding box of the vertices. Coordinates are
//! written with the shortest representation that round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{MeshError, PolygonalMesh};
use crate::geometry::{Point2, Rect};
use crate::scalar::Scalar;

const HEADER: &str = "polymesh 1";

pub fn write_mesh_to<T: Scalar, W: Write>(mesh: &PolygonalMesh<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{}", mesh.n_vertices())?;
    for (p, &flag) in mesh.vertices().iter().zip(mesh.boundary_vertex_flags()) {
        writeln!(out, "{} {} {}", p.x, p.y, u8::from(flag))?;
    }
    writeln!(out, "{}", mesh.n_cells())?;
    for c in mesh.cells() {
        write!(out, "{}", c.vertex_ids.len())?;
        for id in &c.vertex_ids {
            write!(out, " {id}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_mesh<T: Scalar>(mesh: &PolygonalMesh<T>, path: impl AsRef<Path>) -> Result<(), MeshError> {
    write_mesh_to(mesh, BufWriter::new(File::create(path)?))?;
    Ok(())
}

pub fn read_mesh<T: Scalar>(path: impl AsRef<Path>) -> Result<PolygonalMesh<T>, MeshError> {
    read_mesh_from(BufReader::new(File::open(path)?))
}

/// Tokenizer keeping 1-based line and column positions for diagnostics.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String, MeshError> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => return Err(self.error(1, "unexpected end of file")),
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok(line);
                    }
                }
            }
        }
    }

    fn error(&self, column: usize, message: impl Into<String>) -> MeshError {
        MeshError::Parse { line: self.line, column, message: message.into() }
    }

    fn parse<V: std::str::FromStr>(&self, tok: &Token<'_>, what: &str) -> Result<V, MeshError> {
        tok.text.parse().map_err(|_| self.error(tok.column, format!("expected {what}, found `{}`", tok.text)))
    }
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token { text: &line[s..i], column: s + 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: s + 1 });
    }
    out
}

fn expect_count<R: BufRead>(lines: &mut Lines<R>, what: &str) -> Result<usize, MeshError> {
    let line = lines.next_line()?;
    let toks = tokens(&line);
    if toks.len() != 1 {
        return Err(lines.error(toks.get(1).map_or(1, |t| t.column), format!("expected a single {what}")));
    }
    lines.parse(&toks[0], what)
}

pub fn read_mesh_from<T: Scalar, R: BufRead>(reader: R) -> Result<PolygonalMesh<T>, MeshError> {
    let mut lines = Lines { inner: reader.lines(), line: 0 };
    let header = lines.next_line()?;
    if header.trim() != HEADER {
        return Err(lines.error(1, format!("expected header `{HEADER}`")));
    }
    let nv = expect_count(&mut lines, "vertex count")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next_line()?;
        let toks = tokens(&line);
        if toks.len() != 3 {
            return Err(lines.error(toks.get(3).map_or(line.len() + 1, |t| t.column), "expected `x y flag`"));
        }
        let x: T = lines.parse(&toks[0], "x coordinate")?;
        let y: T = lines.parse(&toks[1], "y coordinate")?;
        let flag = match toks[2].text {
            "0" => false,
            "1" => true,
            _ => return Err(lines.error(toks[2].column, "boundary flag must be 0 or 1")),
        };
        if !(x.is_finite() && y.is_finite()) {
            return Err(lines.error(toks[0].column, "non-finite coordinate"));
        }
        vertices.push(Point2::new(x, y));
        flags.push(flag);
    }
    let nc = expect_count(&mut lines, "cell count")?;
    let mut cells = Vec::with_capacity(nc);
    for k in 0..nc {
        let line = lines.next_line()?;
        let toks = tokens(&line);
        let n: usize = lines.parse(&toks[0], "vertex count of cell")?;
        if toks.len() != n + 1 {
            return Err(lines.error(toks[0].column, format!("cell {k} declares {n} vertices but lists {}", toks.len() - 1)));
        }
        let mut ids = Vec::with_capacity(n);
        for tok in &toks[1..] {
            let id: usize = lines.parse(tok, "vertex index")?;
            if id >= nv {
                return Err(lines.error(tok.column, format!("cell {k} references vertex {id}, but only {nv} vertices exist")));
            }
            ids.push(id);
        }
        cells.push(ids);
    }
    if vertices.is_empty() {
        return Err(MeshError::DegenerateRect);
    }
    let mut rect = Rect::new(vertices[0].x, vertices[0].x, vertices[0].y, vertices[0].y);
    for p in &vertices {
        rect = Rect::new(rect.xmin.min(p.x), rect.xmax.max(p.x), rect.ymin.min(p.y), rect.ymax.max(p.y));
    }
    PolygonalMesh::with_flags(vertices, cells, &flags, rect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_distorted_quads, generate_voronoi};

    fn round_trip(mesh: &PolygonalMesh<f64>) -> PolygonalMesh<f64> {
        let mut buf = Vec::new();
        write_mesh_to(mesh, &mut buf).unwrap();
        read_mesh_from(buf.as_slice()).unwrap()
    }

    #[test]
    fn four_square_round_trip() {
        let mesh = generate_distorted_quads::<f64>(Rect::unit(), 2, 2, 0.0, 0).unwrap();
        assert_eq!(round_trip(&mesh), mesh);
    }

    #[test]
    fn voronoi_round_trip_is_exact() {
        let mesh = generate_voronoi::<f64>(Rect::unit(), 100, 5, 42).unwrap();
        let back = round_trip(&mesh);
        assert_eq!(back.n_cells(), 100);
        assert_eq!(back.vertices(), mesh.vertices());
        assert!((back.total_area() - mesh.total_area()).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_index_names_the_cell() {
        let text = "polymesh 1\n3\n0 0 1\n1 0 1\n0 1 1\n1\n3 0 1 7\n";
        let err = read_mesh_from::<f64, _>(text.as_bytes()).unwrap_err();
        match err {
            MeshError::Parse { line, column, message } => {
                assert_eq!((line, column), (7, 7));
                assert!(message.contains("cell 0"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_number_reports_position() {
        let text = "polymesh 1\n1\n0 abc 1\n";
        match read_mesh_from::<f64, _>(text.as_bytes()).unwrap_err() {
            MeshError::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(read_mesh_from::<f64, _>("mesh 2\n".as_bytes()), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn wrong_boundary_flag_is_rejected() {
        let text = "polymesh 1\n4\n0 0 1\n1 0 1\n1 1 0\n0 1 1\n1\n4 0 1 2 3\n";
        assert!(matches!(read_mesh_from::<f64, _>(text.as_bytes()), Err(MeshError::BoundaryFlagMismatch { vertex: 2 })));
    }
}
