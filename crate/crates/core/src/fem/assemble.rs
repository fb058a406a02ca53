//! P1 assembly: stiffness, mass, load and nodal integral weights.

use super::{CsrMatrix, NodalField};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Barycentric coordinates of the three edge midpoints. With weight `A/3`
/// each this rule integrates quadratics exactly.
pub const MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// `int_T u v` for P1 fields given by their vertex values on `T`.
pub fn midpoint_product(area: f64, u: [f64; 3], v: [f64; 3]) -> f64 {
    MIDPOINTS
        .iter()
        .map(|l| {
            let uu: f64 = l.iter().zip(&u).map(|(a, b)| a * b).sum();
            let vv: f64 = l.iter().zip(&v).map(|(a, b)| a * b).sum();
            uu * vv
        })
        .sum::<f64>()
        * area
        / 3.0
}

/// Diffusion coefficient entering a stiffness matrix.
#[derive(Clone, Copy, Debug)]
pub enum Coefficient<'a> {
    Constant(f64),
    /// Indexed by region label.
    PerRegion(&'a [f64]),
    /// Nodal values; each triangle uses the mean of its three vertices.
    Nodal(&'a NodalField),
}

impl Coefficient<'_> {
    fn on(&self, mesh: &TriMesh, t: usize) -> f64 {
        let tri = &mesh.triangles()[t];
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::PerRegion(vals) => {
                vals.get(tri.label as usize).copied().unwrap_or(f64::NAN)
            }
            Coefficient::Nodal(f) => tri.vertices.iter().map(|&v| f[v]).sum::<f64>() / 3.0,
        }
    }
}

/// `K_ij = sum_T c_T |T| grad(phi_i) . grad(phi_j)`.
pub fn assemble_stiffness(mesh: &TriMesh, coeff: Coefficient) -> Result<CsrMatrix> {
    if let Coefficient::Nodal(f) = coeff {
        f.check(mesh)?;
    }
    let mut k = CsrMatrix::zeros(mesh.pattern(1));
    for t in 0..mesh.n_triangles() {
        let c = coeff.on(mesh, t);
        if !(c > 0.0) {
            return Err(Error::NonPositiveCoefficient { triangle: t + 1, value: c });
        }
        add_element_stiffness(mesh, t, c, &mut k);
    }
    Ok(k)
}

/// Unit-coefficient stiffness restricted to the triangles with `label`.
pub fn assemble_region_stiffness(mesh: &TriMesh, label: u32) -> CsrMatrix {
    let mut k = CsrMatrix::zeros(mesh.pattern(1));
    for t in 0..mesh.n_triangles() {
        if mesh.triangles()[t].label == label {
            add_element_stiffness(mesh, t, 1.0, &mut k);
        }
    }
    k
}

fn add_element_stiffness(mesh: &TriMesh, t: usize, c: f64, k: &mut CsrMatrix) {
    let g = mesh.geometry(t);
    let vs = mesh.triangles()[t].vertices;
    for a in 0..3 {
        for b in 0..3 {
            let dot = g.grads[a][0] * g.grads[b][0] + g.grads[a][1] * g.grads[b][1];
            k.add(vs[a], vs[b], c * g.area * dot);
        }
    }
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &TriMesh) -> CsrMatrix {
    let mut m = CsrMatrix::zeros(mesh.pattern(1));
    for t in 0..mesh.n_triangles() {
        let area = mesh.signed_area(t);
        let vs = mesh.triangles()[t].vertices;
        for a in 0..3 {
            for b in 0..3 {
                let mut u = [0.0; 3];
                let mut v = [0.0; 3];
                u[a] = 1.0;
                v[b] = 1.0;
                m.add(vs[a], vs[b], midpoint_product(area, u, v));
            }
        }
    }
    m
}

/// Nodal integrals `w_i = int phi_i`, so that `w . y = int y` for P1 `y`.
pub fn nodal_weights(mesh: &TriMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a3 = mesh.signed_area(t) / 3.0;
        for &v in &tri.vertices {
            w[v] += a3;
        }
    }
    w
}

/// Volume source for the load vector.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Constant(f64),
    Nodal(&'a NodalField),
}

/// `b_i = int f phi_i + int_{boundary} g phi_i ds` with constant `g`.
pub fn assemble_load(mesh: &TriMesh, f: Source, g: f64) -> Result<Vec<f64>> {
    let mut b = vec![0.0; mesh.n_vertices()];
    match f {
        Source::Constant(c) if c == 0.0 => {}
        _ => {
            if let Source::Nodal(field) = f {
                field.check(mesh)?;
            }
            for (t, tri) in mesh.triangles().iter().enumerate() {
                let area = mesh.signed_area(t);
                let fv = match f {
                    Source::Constant(c) => [c; 3],
                    Source::Nodal(field) => tri.vertices.map(|v| field[v]),
                };
                for a in 0..3 {
                    let mut phi = [0.0; 3];
                    phi[a] = 1.0;
                    b[tri.vertices[a]] += midpoint_product(area, fv, phi);
                }
            }
        }
    }
    if g != 0.0 {
        for &[p, q] in mesh.boundary_edges() {
            let (xp, xq) = (mesh.vertices()[p], mesh.vertices()[q]);
            let half = 0.5 * g * (xq[0] - xp[0]).hypot(xq[1] - xp[1]);
            b[p] += half;
            b[q] += half;
        }
    }
    Ok(b)
}
