//! Convergence CSV, legacy VTK snapshots and target value files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::{NodalField, VectorField};
use crate::mesh::{triangle_quality, TriMesh};
use crate::optimizer::IterationRecord;

pub const CSV_HEADER: &str = "iter,step,J_sample,grad_norm_sq,V_l2,backtracks,min_quality,accepted,j_hat,v_hat";

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:e}"))
}

/// One header line plus one row per record.
pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in history {
        writeln!(
            s,
            "{},{},{:e},{:e},{:e},{},{},{},{},{}",
            r.n,
            r.step,
            r.j_sample,
            r.grad_norm_sq,
            r.v_l2,
            r.backtracks,
            r.min_quality,
            u8::from(r.accepted),
            opt(r.j_hat),
            opt(r.v_hat)
        )
        .unwrap();
    }
    s
}

/// Point data attached to a snapshot.
#[derive(Default)]
pub struct PointData<'a> {
    pub scalars: Vec<(&'a str, &'a NodalField)>,
    pub vectors: Vec<(&'a str, &'a VectorField)>,
}

/// Legacy ASCII unstructured grid with cell data `region` and `quality`
/// (aspect ratio, -1 for inverted triangles).
pub fn vtk(mesh: &TriMesh, title: &str, data: &PointData) -> String {
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{} {} 0", p[0], p[1]).unwrap();
    }
    let nt = mesh.n_triangles();
    writeln!(s, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    writeln!(s, "CELL_DATA {nt}\nSCALARS region int 1\nLOOKUP_TABLE default").unwrap();
    for t in mesh.triangles() {
        writeln!(s, "{}", t.label).unwrap();
    }
    writeln!(s, "SCALARS quality double 1\nLOOKUP_TABLE default").unwrap();
    for r in triangle_quality(mesh).ratios {
        writeln!(s, "{}", r.unwrap_or(-1.0)).unwrap();
    }
    if !data.scalars.is_empty() || !data.vectors.is_empty() {
        writeln!(s, "POINT_DATA {}", mesh.n_vertices()).unwrap();
        for (name, f) in &data.scalars {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for v in f.values() {
                writeln!(s, "{v}").unwrap();
            }
        }
        for (name, f) in &data.vectors {
            writeln!(s, "VECTORS {name} double").unwrap();
            for v in f.values() {
                writeln!(s, "{} {} 0", v[0], v[1]).unwrap();
            }
        }
    }
    s
}

/// Nodal values in the `$Values` format, one `id value` line per vertex.
pub fn write_values(values: &NodalField) -> String {
    let mut s = format!("$Values\n{}\n", values.values().len());
    for (i, v) in values.values().iter().enumerate() {
        writeln!(s, "{} {:.16e}", i + 1, v).unwrap();
    }
    s
}

pub fn parse_values(text: &str) -> Result<NodalField> {
    let perr = |line: usize, msg: String| Error::MeshParse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let last = text.lines().count();
    match lines.next() {
        Some((_, "$Values")) => {}
        Some((line, t)) => return Err(perr(line, format!("expected section $Values, found `{t}`"))),
        None => return Err(perr(last, "empty values file".into())),
    }
    let (line, t) = lines.next().ok_or_else(|| perr(last, "missing value count".into()))?;
    let n: usize = t.parse().map_err(|_| perr(line, format!("invalid value count `{t}`")))?;
    let mut values = Vec::with_capacity(n);
    for k in 1..=n {
        let (line, t) = lines.next().ok_or_else(|| perr(last, format!("expected {n} values, found {}", k - 1)))?;
        let (id, v) = t.split_once(char::is_whitespace).ok_or_else(|| perr(line, "expected `id value`".into()))?;
        if id.parse::<usize>().ok() != Some(k) {
            return Err(perr(line, format!("expected id {k}, found `{id}`")));
        }
        let v: f64 = v.trim().parse().map_err(|_| perr(line, format!("invalid value `{}`", v.trim())))?;
        if !v.is_finite() {
            return Err(perr(line, format!("non-finite value {v}")));
        }
        values.push(v);
    }
    if let Some((line, t)) = lines.next() {
        return Err(perr(line, format!("trailing content `{t}`")));
    }
    Ok(NodalField::new(values))
}
