//! Point location with barycentric coordinates.

use super::{Point, TriMesh};
use crate::error::{Error, Result};

const BARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
    /// Set when the point lies outside every triangle and the coordinates
    /// were clamped onto the nearest one.
    pub extrapolated: bool,
}

fn barycentric(c: &[Point; 3], x: Point) -> [f64; 3] {
    let [a, b, cc] = *c;
    let det = (b[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((x[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (x[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn closest_on_segment(a: Point, b: Point, x: Point) -> (f64, f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 > 0.0 {
        (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let p = [a[0] + s * d[0], a[1] + s * d[1]];
    (s, (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2))
}

/// Squared distance from `x` to the triangle boundary and the clamped
/// barycentric coordinates of the closest point.
fn nearest_on_triangle(c: &[Point; 3], x: Point) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    for k in 0..3 {
        let (i, j) = (k, (k + 1) % 3);
        let (s, d2) = closest_on_segment(c[i], c[j], x);
        if d2 < best.0 {
            let mut l = [0.0; 3];
            l[i] = 1.0 - s;
            l[j] = s;
            best = (d2, l);
        }
    }
    best
}

fn inside(l: &[f64; 3]) -> bool {
    l.iter().all(|&v| v >= -BARY_TOL)
}

/// Locates `x` by scanning every triangle.
pub fn locate_point(mesh: &TriMesh, x: Point) -> Result<Location> {
    if mesh.n_triangles() == 0 {
        return Err(Error::EmptyMesh);
    }
    for t in 0..mesh.n_triangles() {
        let l = barycentric(&mesh.corners(t), x);
        if inside(&l) {
            return Ok(Location { triangle: t, bary: l, extrapolated: false });
        }
    }
    Ok(nearest(mesh, x, 0..mesh.n_triangles()))
}

fn nearest(mesh: &TriMesh, x: Point, candidates: impl Iterator<Item = usize>) -> Location {
    let mut best = (f64::INFINITY, 0, [1.0, 0.0, 0.0]);
    for t in candidates {
        let (d2, l) = nearest_on_triangle(&mesh.corners(t), x);
        if d2 < best.0 {
            best = (d2, t, l);
        }
    }
    Location { triangle: best.1, bary: best.2, extrapolated: true }
}

/// Bucket grid over triangle bounding boxes for repeated queries against a
/// fixed mesh.
#[derive(Clone, Debug)]
pub struct PointLocator {
    mesh: TriMesh,
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        if mesh.n_triangles() == 0 {
            return Err(Error::EmptyMesh);
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let side = ((mesh.n_triangles() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = PointLocator {
            mesh: mesh.clone(),
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
        };
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in c {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let (i0, j0) = loc.cell_of(a);
            let (i1, j1) = loc.cell_of(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(t);
                }
            }
        }
        Ok(loc)
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    fn cell_of(&self, x: Point) -> (usize, usize) {
        let f = |k: usize| {
            let c = ((x[k] - self.origin[k]) / self.cell[k]).floor();
            (c.max(0.0) as usize).min(self.dims[k] - 1)
        };
        (f(0), f(1))
    }

    pub fn locate(&self, x: Point) -> Location {
        let (i, j) = self.cell_of(x);
        for &t in &self.buckets[j * self.dims[0] + i] {
            let l = barycentric(&self.mesh.corners(t), x);
            if inside(&l) {
                return Location { triangle: t, bary: l, extrapolated: false };
            }
        }
        // outside the hull (or a bucket miss on the hull edge): full scan
        for t in 0..self.mesh.n_triangles() {
            let l = barycentric(&self.mesh.corners(t), x);
            if inside(&l) {
                return Location { triangle: t, bary: l, extrapolated: false };
            }
        }
        nearest(&self.mesh, x, 0..self.mesh.n_triangles())
    }
}
