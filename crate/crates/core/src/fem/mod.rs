//! P1 finite elements on triangle meshes.

mod assemble;
mod field;
mod solve;
mod sparse;

pub use assemble::{
    assemble_load, assemble_mass, assemble_region_stiffness, assemble_stiffness, midpoint_product,
    nodal_weights, Coefficient, Source, MIDPOINTS,
};
pub use field::{NodalField, VectorField};
pub use solve::{
    solve_dirichlet, solve_zero_mean, Constraint, SolveStats, SolverOptions, SparseSystem,
    ZeroMeanSolution, DEFAULT_TOL,
};
pub use sparse::{CsrMatrix, SparsityPattern};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Constant gradient of the P1 interpolant of `field` on triangle `t`.
pub fn field_gradient(mesh: &TriMesh, field: &NodalField, t: usize) -> Result<[f64; 2]> {
    if !(mesh.signed_area(t).abs() > 0.0) {
        return Err(Error::DegenerateTriangle(t + 1));
    }
    Ok(gradient_on(mesh, field.values(), t))
}

pub(crate) fn gradient_on(mesh: &TriMesh, values: &[f64], t: usize) -> [f64; 2] {
    let g = mesh.geometry(t);
    let vs = mesh.triangles()[t].vertices;
    let mut out = [0.0; 2];
    for a in 0..3 {
        out[0] += values[vs[a]] * g.grads[a][0];
        out[1] += values[vs[a]] * g.grads[a][1];
    }
    out
}

/// `sqrt(u^T M u)` with the consistent mass matrix, computed element-wise.
pub fn l2_norm(mesh: &TriMesh, field: &NodalField) -> f64 {
    l2_inner(mesh, field.values(), field.values()).max(0.0).sqrt()
}

/// L2 norm of a vector field, summing both components.
pub fn l2_norm_vector(mesh: &TriMesh, field: &VectorField) -> f64 {
    let (x, y) = (field.component(0), field.component(1));
    (l2_inner(mesh, x.values(), x.values()) + l2_inner(mesh, y.values(), y.values())).max(0.0).sqrt()
}

/// `int u v` for P1 coefficient vectors.
pub fn l2_inner(mesh: &TriMesh, u: &[f64], v: &[f64]) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            midpoint_product(mesh.signed_area(t), tri.vertices.map(|i| u[i]), tri.vertices.map(|i| v[i]))
        })
        .sum()
}
