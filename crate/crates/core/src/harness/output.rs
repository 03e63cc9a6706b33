//! CSV tables and field snapshots.
//!
//! Field files use the legacy ASCII VTK polygon layout:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! sgvem field
//! ASCII
//! DATASET POLYDATA
//! FIELD FieldData 1
//! TIME 1 1 double
//! <t>
//! POINTS <n> double
//! <x> <y> 0            (n lines)
//! POLYGONS <cells> <cells + Σ vertex counts>
//! <k> <i1> ... <ik>    (one line per cell)
//! POINT_DATA <n>
//! SCALARS u double 1
//! LOOKUP_TABLE default
//! <u>                  (n lines)
//! ```
//!
//! Reals are written with 17 significant digits so a round trip is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::HarnessError;
use crate::geometry::Point2;
use crate::mesh::PolygonalMesh;
use crate::norms::ConvergenceRecord;

pub const CSV_HEADER: &str = "h,dt,dofs,l2,h1,rate_l2,rate_h1,newton,seconds";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn opt(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.4}")).unwrap_or_default()
}

/// Writes `records` under [`CSV_HEADER`]; `seconds` is 0 when `timing` is off.
pub fn write_csv_to<W: Write>(records: &[ConvergenceRecord], timing: bool, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{:.6e},{:.6e},{},{:.6e},{:.6e},{},{},{},{:.6}",
            r.h,
            r.dt,
            r.dofs,
            r.l2_error,
            r.h1_error,
            opt(r.rate_l2),
            opt(r.rate_h1),
            r.newton_total,
            if timing { r.wall_seconds } else { 0.0 }
        )?;
    }
    out.flush()
}

pub fn emit_csv(records: &[ConvergenceRecord], path: impl AsRef<Path>, timing: bool) -> Result<(), HarnessError> {
    let path = path.as_ref();
    write_csv_to(records, timing, create(path)?).map_err(io_err(path))
}

type Mirror = fn(Point2<f64>, f64, f64) -> Point2<f64>;

/// Per-vertex field on a set of polygons at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub points: Vec<Point2<f64>>,
    pub polygons: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

impl FieldSnapshot {
    pub fn from_mesh(mesh: &PolygonalMesh<f64>, t: f64, values: Vec<f64>) -> Result<Self, HarnessError> {
        if values.len() != mesh.n_vertices() {
            return Err(HarnessError::Config(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(Self {
            t,
            points: mesh.vertices().to_vec(),
            polygons: mesh.cells().iter().map(|c| c.vertex_ids.clone()).collect(),
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
    }

    /// Union of the field with its mirror images across `x = x0`, `y = y0`
    /// and both; mirrored polygons are re-oriented counter-clockwise.
    pub fn reflect(&self, x0: f64, y0: f64) -> Self {
        let n = self.points.len();
        let maps: [Mirror; 4] = [
            |p, _, _| p,
            |p, x0, _| Point2::new(2.0 * x0 - p.x, p.y),
            |p, _, y0| Point2::new(p.x, 2.0 * y0 - p.y),
            |p, x0, y0| Point2::new(2.0 * x0 - p.x, 2.0 * y0 - p.y),
        ];
        let mut out = Self { t: self.t, points: Vec::with_capacity(4 * n), polygons: Vec::new(), values: Vec::new() };
        for (copy, map) in maps.iter().enumerate() {
            let offset = copy * n;
            out.points.extend(self.points.iter().map(|&p| map(p, x0, y0)));
            out.values.extend_from_slice(&self.values);
            // a single reflection flips orientation, a double one restores it
            let flip = copy == 1 || copy == 2;
            out.polygons.extend(self.polygons.iter().map(|poly| {
                let mut ids: Vec<usize> = poly.iter().map(|&i| i + offset).collect();
                if flip {
                    ids.reverse();
                }
                ids
            }));
        }
        out
    }
}

pub fn write_field_to<W: Write>(field: &FieldSnapshot, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "sgvem field")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "FIELD FieldData 1")?;
    writeln!(out, "TIME 1 1 double")?;
    writeln!(out, "{:.16e}", field.t)?;
    writeln!(out, "POINTS {} double", field.points.len())?;
    for p in &field.points {
        writeln!(out, "{:.16e} {:.16e} 0", p.x, p.y)?;
    }
    let size: usize = field.polygons.iter().map(|c| c.len() + 1).sum();
    writeln!(out, "POLYGONS {} {}", field.polygons.len(), size)?;
    for c in &field.polygons {
        write!(out, "{}", c.len())?;
        for i in c {
            write!(out, " {i}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "POINT_DATA {}", field.values.len())?;
    writeln!(out, "SCALARS u double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in &field.values {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()
}

pub fn emit_field(field: &FieldSnapshot, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    write_field_to(field, create(path)?).map_err(io_err(path))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, HarnessError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(s)) => Ok(s),
            Some(Err(e)) => Err(self.err(&e.to_string())),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: &str) -> HarnessError {
        HarnessError::Parse { line: self.line, message: message.to_string() }
    }

    fn expect(&mut self, want: &str) -> Result<(), HarnessError> {
        let got = self.next()?;
        if got.trim() != want {
            return Err(self.err(&format!("expected '{want}', found '{}'", got.trim())));
        }
        Ok(())
    }

    /// Reads a line `"<keyword> <count> ..."` and returns the numeric fields.
    fn header(&mut self, keyword: &str) -> Result<Vec<usize>, HarnessError> {
        let got = self.next()?;
        let mut parts = got.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.err(&format!("expected {keyword} section")));
        }
        Ok(parts.filter_map(|p| p.parse().ok()).collect())
    }

    fn numbers<T: std::str::FromStr>(&mut self) -> Result<Vec<T>, HarnessError> {
        let s = self.next()?;
        s.split_whitespace().map(|t| t.parse::<T>().map_err(|_| self.err(&format!("bad number '{t}'")))).collect()
    }
}

pub fn read_field_from<R: BufRead>(reader: R) -> Result<FieldSnapshot, HarnessError> {
    let mut l = Lines { inner: reader.lines(), line: 0 };
    l.expect("# vtk DataFile Version 3.0")?;
    l.next()?;
    l.expect("ASCII")?;
    l.expect("DATASET POLYDATA")?;
    l.expect("FIELD FieldData 1")?;
    l.expect("TIME 1 1 double")?;
    let t = *l.numbers::<f64>()?.first().ok_or_else(|| l.err("missing time"))?;
    let n = *l.header("POINTS")?.first().ok_or_else(|| l.err("missing point count"))?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let xyz = l.numbers::<f64>()?;
        if xyz.len() != 3 {
            return Err(l.err("point needs 3 coordinates"));
        }
        points.push(Point2::new(xyz[0], xyz[1]));
    }
    let m = *l.header("POLYGONS")?.first().ok_or_else(|| l.err("missing polygon count"))?;
    let mut polygons = Vec::with_capacity(m);
    for _ in 0..m {
        let ids = l.numbers::<usize>()?;
        if ids.is_empty() || ids[0] + 1 != ids.len() {
            return Err(l.err("polygon length does not match its vertex list"));
        }
        if let Some(&bad) = ids[1..].iter().find(|&&i| i >= n) {
            return Err(l.err(&format!("vertex index {bad} out of range")));
        }
        polygons.push(ids[1..].to_vec());
    }
    let count = *l.header("POINT_DATA")?.first().ok_or_else(|| l.err("missing value count"))?;
    if count != n {
        return Err(l.err("POINT_DATA count differs from POINTS"));
    }
    l.expect("SCALARS u double 1")?;
    l.expect("LOOKUP_TABLE default")?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(*l.numbers::<f64>()?.first().ok_or_else(|| l.err("missing value"))?);
    }
    Ok(FieldSnapshot { t, points, polygons, values })
}

pub fn read_field(path: impl AsRef<Path>) -> Result<FieldSnapshot, HarnessError> {
    let path = path.as_ref();
    read_field_from(BufReader::new(File::open(path).map_err(io_err(path))?))
}
