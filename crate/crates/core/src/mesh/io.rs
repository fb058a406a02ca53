//! ASCII mesh files with `$Nodes`, `$Triangles` and `$BoundaryEdges`
//! sections, 1-based indices and `#` comments.

use std::fmt::Write as _;

use super::{signed_area, Point, TriMesh, Triangle};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-empty line with comments removed, with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content().ok_or_else(|| Error::MeshParse {
            line: self.last,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::MeshParse { line, msg: msg.into() }
}

fn fields<'a, const K: usize>(line: usize, text: &'a str, what: &str) -> Result<[&'a str; K]> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| perr(line, format!("{what}: expected {K} fields, found {}", p.len())))
}

fn section_header(lines: &mut Lines, name: &str) -> Result<usize> {
    let (line, text) = lines.expect(name)?;
    if text != name {
        return Err(perr(line, format!("expected section {name}, found `{text}`")));
    }
    let (line, text) = lines.expect("entry count")?;
    text.parse::<usize>()
        .map_err(|_| perr(line, format!("invalid entry count `{text}` in {name}")))
}

fn parse_id(line: usize, s: &str, expected: usize) -> Result<()> {
    let id: usize = s.parse().map_err(|_| perr(line, format!("invalid id `{s}`")))?;
    if id != expected {
        return Err(perr(line, format!("expected id {expected}, found {id}")));
    }
    Ok(())
}

fn parse_index(line: usize, s: &str, n: usize) -> Result<usize> {
    let i: usize = s.parse().map_err(|_| perr(line, format!("invalid vertex index `{s}`")))?;
    if i == 0 || i > n {
        return Err(perr(line, format!("vertex index {i} out of range 1..={n}")));
    }
    Ok(i - 1)
}

fn parse_float(line: usize, s: &str) -> Result<f64> {
    let x: f64 = s.parse().map_err(|_| perr(line, format!("invalid coordinate `{s}`")))?;
    if !x.is_finite() {
        return Err(perr(line, format!("non-finite coordinate `{s}`")));
    }
    Ok(x)
}

/// Parses mesh-file text into a validated [`TriMesh`]. Errors carry the
/// offending line number.
pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    parse(text, true)
}

/// Parses a mesh that may contain inverted triangles; every other check
/// still applies.
pub fn parse_mesh_lenient(text: &str) -> Result<TriMesh> {
    parse(text, false)
}

fn parse(text: &str, check_orientation: bool) -> Result<TriMesh> {
    let mut lines = Lines::new(text);

    let n = section_header(&mut lines, "$Nodes")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(n);
    for k in 1..=n {
        let (line, t) = lines.expect("node")?;
        let [id, x, y] = fields::<3>(line, t, "node")?;
        parse_id(line, id, k)?;
        vertices.push([parse_float(line, x)?, parse_float(line, y)?]);
    }

    let nt = section_header(&mut lines, "$Triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut tri_lines = Vec::with_capacity(nt);
    for k in 1..=nt {
        let (line, t) = lines.expect("triangle")?;
        let [id, a, b, c, label] = fields::<5>(line, t, "triangle")?;
        parse_id(line, id, k)?;
        let v = [parse_index(line, a, n)?, parse_index(line, b, n)?, parse_index(line, c, n)?];
        let label: u32 =
            label.parse().map_err(|_| perr(line, format!("invalid region label `{label}`")))?;
        let area = signed_area(vertices[v[0]], vertices[v[1]], vertices[v[2]]);
        if check_orientation && !(area > 0.0) {
            return Err(perr(line, format!("inverted triangle {k} (signed area {area:e})")));
        }
        triangles.push(Triangle { vertices: v, label });
        tri_lines.push(line);
    }

    let nb = section_header(&mut lines, "$BoundaryEdges")?;
    let mut boundary = Vec::with_capacity(nb);
    let mut edge_lines = Vec::with_capacity(nb);
    for k in 1..=nb {
        let (line, t) = lines.expect("boundary edge")?;
        let [id, a, b] = fields::<3>(line, t, "boundary edge")?;
        parse_id(line, id, k)?;
        boundary.push([parse_index(line, a, n)?, parse_index(line, b, n)?]);
        edge_lines.push(line);
    }
    if let Some((line, t)) = lines.next_content() {
        return Err(perr(line, format!("trailing content `{t}`")));
    }

    let built = if check_orientation {
        TriMesh::new(vertices, triangles, boundary)
    } else {
        TriMesh::new_allow_inverted(vertices, triangles, boundary)
    };
    built.map_err(|e| match e {
        Error::Parameter(msg) => {
            // point at the boundary edge line when one is named
            let line = msg
                .strip_prefix("dangling boundary edge ")
                .and_then(|s| s.split_whitespace().next())
                .and_then(|s| s.parse::<usize>().ok())
                .and_then(|k| edge_lines.get(k - 1).copied())
                .unwrap_or(lines.last);
            perr(line, msg)
        }
        Error::InvertedTriangle { id, area } => {
            perr(tri_lines[id - 1], format!("inverted triangle {id} (signed area {area:e})"))
        }
        other => perr(lines.last, other.to_string()),
    })
}

/// Serializes a mesh; coordinates use 17 significant digits so parsing the
/// output reproduces them bit for bit.
pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    writeln!(s, "$Nodes\n{}", mesh.n_vertices()).unwrap();
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(s, "{} {:.16e} {:.16e}", i + 1, p[0], p[1]).unwrap();
    }
    writeln!(s, "$Triangles\n{}", mesh.n_triangles()).unwrap();
    for (i, t) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = t.vertices;
        writeln!(s, "{} {} {} {} {}", i + 1, a + 1, b + 1, c + 1, t.label).unwrap();
    }
    writeln!(s, "$BoundaryEdges\n{}", mesh.boundary_edges().len()).unwrap();
    for (i, [a, b]) in mesh.boundary_edges().iter().enumerate() {
        writeln!(s, "{} {} {}", i + 1, a + 1, b + 1).unwrap();
    }
    s
}
