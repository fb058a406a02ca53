//! Structured triangulations of the unit square with inclusions fitted by
//! snapping grid vertices onto the inclusion curves.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Point, TriMesh, Triangle};
use crate::error::{Error, Result};

/// A closed inclusion curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Inclusion {
    Circle { center: Point, radius: f64 },
    /// Ellipse with semi-axes `(a, b)` rotated by `angle` radians.
    Ellipse { center: Point, semi_axes: [f64; 2], angle: f64 },
}

impl Inclusion {
    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        Inclusion::Circle { center: [cx, cy], radius: r }
    }

    pub fn ellipse(cx: f64, cy: f64, a: f64, b: f64, angle: f64) -> Self {
        Inclusion::Ellipse { center: [cx, cy], semi_axes: [a, b], angle }
    }

    fn center(&self) -> Point {
        match *self {
            Inclusion::Circle { center, .. } | Inclusion::Ellipse { center, .. } => center,
        }
    }

    /// `(a, b, cos, sin)` of the equivalent ellipse.
    fn axes(&self) -> (f64, f64, f64, f64) {
        match *self {
            Inclusion::Circle { radius, .. } => (radius, radius, 1.0, 0.0),
            Inclusion::Ellipse { semi_axes, angle, .. } => {
                (semi_axes[0], semi_axes[1], angle.cos(), angle.sin())
            }
        }
    }

    fn local(&self, p: Point) -> (f64, f64) {
        let c = self.center();
        let (_, _, co, si) = self.axes();
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        (co * dx + si * dy, -si * dx + co * dy)
    }

    /// Level set: negative inside, zero on the curve.
    pub fn level(&self, p: Point) -> f64 {
        let (a, b, _, _) = self.axes();
        let (u, v) = self.local(p);
        (u / a).powi(2) + (v / b).powi(2) - 1.0
    }

    pub fn boundary_point(&self, theta: f64) -> Point {
        let c = self.center();
        let (a, b, co, si) = self.axes();
        let (u, v) = (a * theta.cos(), b * theta.sin());
        [c[0] + co * u - si * v, c[1] + si * u + co * v]
    }

    /// Parameter `s` in `[0, 1]` where the segment `p + s (q - p)` meets the
    /// curve. Requires a sign change of the level set between `p` and `q`.
    fn crossing(&self, p: Point, q: Point) -> f64 {
        let (a, b, _, _) = self.axes();
        let (u0, v0) = self.local(p);
        let (u1, v1) = self.local(q);
        let (du, dv) = (u1 - u0, v1 - v0);
        let qa = (du / a).powi(2) + (dv / b).powi(2);
        let qb = 2.0 * (u0 * du / (a * a) + v0 * dv / (b * b));
        let qc = (u0 / a).powi(2) + (v0 / b).powi(2) - 1.0;
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        let r1 = (-qb - disc) / (2.0 * qa);
        let r2 = (-qb + disc) / (2.0 * qa);
        if (0.0..=1.0).contains(&r1) {
            r1
        } else {
            r2.clamp(0.0, 1.0)
        }
    }

    fn samples(&self, n: usize) -> Vec<Point> {
        (0..n).map(|k| self.boundary_point(2.0 * PI * k as f64 / n as f64)).collect()
    }
}

fn check_layout(inclusions: &[Inclusion], h: f64) -> Result<()> {
    const SAMPLES: usize = 720;
    let margin = 2.0 * h;
    for (i, inc) in inclusions.iter().enumerate() {
        let (a, b, _, _) = inc.axes();
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Generation(format!("inclusion {} has non-positive size", i + 1)));
        }
        for p in inc.samples(SAMPLES) {
            let d = p[0].min(p[1]).min(1.0 - p[0]).min(1.0 - p[1]);
            if d < margin {
                return Err(Error::Generation(format!(
                    "inclusion {} is within {margin} of the outer boundary",
                    i + 1
                )));
            }
        }
    }
    for i in 0..inclusions.len() {
        let si = inclusions[i].samples(SAMPLES);
        for j in i + 1..inclusions.len() {
            let sj = inclusions[j].samples(SAMPLES);
            let inside = si.iter().any(|&p| inclusions[j].level(p) <= 0.0)
                || sj.iter().any(|&p| inclusions[i].level(p) <= 0.0);
            let gap = si
                .iter()
                .flat_map(|p| sj.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1])))
                .fold(f64::INFINITY, f64::min);
            if inside || gap < margin {
                return Err(Error::Generation(format!(
                    "inclusions {} and {} overlap or are closer than {margin}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Structured `resolution x resolution` grid of the unit square, each cell
/// split along its rising diagonal, with the grid vertex nearest to each
/// inclusion crossing snapped onto the inclusion curve.
pub fn generate_mesh(resolution: usize, inclusions: &[Inclusion]) -> Result<TriMesh> {
    if resolution == 0 {
        return Err(Error::Generation("resolution must be positive".into()));
    }
    let r = resolution;
    let h = 1.0 / r as f64;
    check_layout(inclusions, h)?;

    let idx = |i: usize, j: usize| j * (r + 1) + i;
    let mut vertices: Vec<Point> = Vec::with_capacity((r + 1) * (r + 1));
    for j in 0..=r {
        for i in 0..=r {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(2 * r * r);
    for j in 0..r {
        for i in 0..r {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            tris.push([v00, v10, v11]);
            tris.push([v00, v11, v01]);
        }
    }
    let mut edges: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();

    let mut labels = vec![0u32; tris.len()];
    for (k, inc) in inclusions.iter().enumerate() {
        // sign per vertex: -1 inside, 0 on, +1 outside
        let mut sign: Vec<i8> = vertices
            .iter()
            .map(|&p| {
                let l = inc.level(p);
                if l < 0.0 {
                    -1
                } else if l > 0.0 {
                    1
                } else {
                    0
                }
            })
            .collect();
        let mut snap: HashMap<usize, (f64, Point)> = HashMap::new();
        for &(a, b) in &edges {
            if sign[a] * sign[b] >= 0 {
                continue;
            }
            let (pa, pb) = (vertices[a], vertices[b]);
            let s = inc.crossing(pa, pb);
            let c = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            let (v, dist) = if s <= 0.5 { (a, s * len) } else { (b, (1.0 - s) * len) };
            let entry = snap.entry(v).or_insert((f64::INFINITY, c));
            if dist < entry.0 {
                *entry = (dist, c);
            }
        }
        let mut moved: Vec<_> = snap.into_iter().collect();
        moved.sort_unstable_by_key(|&(v, _)| v);
        for (v, (_, c)) in moved {
            vertices[v] = c;
            sign[v] = 0;
        }
        for (t, tri) in tris.iter().enumerate() {
            let s: Vec<i8> = tri.iter().map(|&v| sign[v]).collect();
            let inside = if s.contains(&-1) {
                if s.contains(&1) {
                    return Err(Error::Generation(format!(
                        "triangle {} still crosses inclusion {} after snapping",
                        t + 1,
                        k + 1
                    )));
                }
                true
            } else if s.iter().all(|&x| x == 0) {
                let c = tri.iter().fold([0.0, 0.0], |acc, &v| {
                    [acc[0] + vertices[v][0] / 3.0, acc[1] + vertices[v][1] / 3.0]
                });
                inc.level(c) < 0.0
            } else {
                false
            };
            if inside {
                labels[t] = k as u32 + 1;
            }
        }
    }

    let mut boundary = Vec::with_capacity(4 * r);
    for i in 0..r {
        boundary.push([idx(i, 0), idx(i + 1, 0)]);
    }
    for j in 0..r {
        boundary.push([idx(r, j), idx(r, j + 1)]);
    }
    for i in (0..r).rev() {
        boundary.push([idx(i + 1, r), idx(i, r)]);
    }
    for j in (0..r).rev() {
        boundary.push([idx(0, j + 1), idx(0, j)]);
    }

    let triangles = tris
        .into_iter()
        .zip(labels)
        .map(|(vertices, label)| Triangle { vertices, label })
        .collect();
    let mesh = TriMesh::new(vertices, triangles, boundary).map_err(|e| match e {
        Error::InvertedTriangle { id, .. } => {
            Error::Generation(format!("snapping inverted triangle {id}"))
        }
        other => other,
    })?;
    if let Some(v) = mesh.validate().first() {
        return Err(Error::Generation(v.to_string()));
    }
    Ok(mesh)
}
