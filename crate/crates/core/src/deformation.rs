//! Gradient representative in the elasticity metric: a harmonic stiffness
//! field `mu`, the linear-elasticity operator and the deformation solve.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_stiffness, solve_dirichlet, Coefficient, CsrMatrix, NodalField, SolverOptions,
    SparseSystem, VectorField,
};
use crate::mesh::TriMesh;
use crate::shape_calculus::ShapeDerivativeLoad;

/// Lamé parameters: nodal `mu` and constant `lambda`.
#[derive(Clone, Debug)]
pub struct LameField {
    pub mu: NodalField,
    pub lambda: f64,
}

/// Harmonic `mu` equal to `mu_max` on the interface and `mu_min` on the
/// outer boundary, clamped into `[mu_min, mu_max]`.
pub fn solve_mu_field(mesh: &TriMesh, mu_min: f64, mu_max: f64, opts: &SolverOptions) -> Result<LameField> {
    if !(mu_min > 0.0 && mu_min <= mu_max) {
        return Err(Error::Parameter(format!("need 0 < mu_min <= mu_max, got {mu_min}, {mu_max}")));
    }
    let (mut dofs, mut values) = (Vec::new(), Vec::new());
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) {
            dofs.push(v);
            values.push(mu_min);
        } else if mesh.is_interface_vertex(v) {
            dofs.push(v);
            values.push(mu_max);
        }
    }
    let k = assemble_stiffness(mesh, Coefficient::Constant(1.0))?;
    let (mut mu, _) = solve_dirichlet(&SparseSystem::dirichlet(k, dofs, values), &vec![0.0; mesh.n_vertices()], opts)?;
    mu.iter_mut().for_each(|m| *m = m.clamp(mu_min, mu_max));
    Ok(LameField { mu: NodalField::new(mu), lambda: 0.0 })
}

/// `a(V, U) = int lambda div V div U + 2 mu eps(V) : eps(U)` on interleaved
/// dofs `2 v + k`, tagged with homogeneous Dirichlet data on the boundary.
pub fn assemble_elasticity(mesh: &TriMesh, lame: &LameField) -> Result<SparseSystem> {
    lame.mu.check(mesh)?;
    let mut a = CsrMatrix::zeros(mesh.pattern(2));
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = mesh.geometry(t);
        let vs = tri.vertices;
        let mu = vs.iter().map(|&v| lame.mu[v]).sum::<f64>() / 3.0;
        if !(mu > 0.0) {
            return Err(Error::NonPositiveCoefficient { triangle: t + 1, value: mu });
        }
        let g = geo.grads;
        for a_ in 0..3 {
            for b in 0..3 {
                let gab = g[a_][0] * g[b][0] + g[a_][1] * g[b][1];
                for k in 0..2 {
                    for l in 0..2 {
                        let delta = if k == l { gab } else { 0.0 };
                        let val = lame.lambda * g[a_][k] * g[b][l] + mu * (delta + g[a_][l] * g[b][k]);
                        a.add(2 * vs[a_] + k, 2 * vs[b] + l, geo.area * val);
                    }
                }
            }
        }
    }
    let mut dofs = Vec::new();
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) {
            dofs.extend([2 * v, 2 * v + 1]);
        }
    }
    let n = dofs.len();
    Ok(SparseSystem::dirichlet(a, dofs, vec![0.0; n]))
}

/// Deformation field and its squared norm in the elasticity metric.
#[derive(Clone, Debug)]
pub struct Deformation {
    pub field: VectorField,
    /// `a(V, V) = dJ[V]`.
    pub grad_norm_sq: f64,
}

/// Solves `a(V, U) = dJ[U]` for all `U` vanishing on the boundary.
pub fn solve_deformation(system: &SparseSystem, load: &ShapeDerivativeLoad, opts: &SolverOptions) -> Result<Deformation> {
    let rhs = load.load.to_interleaved();
    if rhs.len() != system.matrix.dim() {
        return Err(Error::FieldLength { expected: system.matrix.dim() / 2, got: load.load.len() });
    }
    let (v, _) = solve_dirichlet(system, &rhs, opts)?;
    let grad_norm_sq = rhs.iter().zip(&v).map(|(a, b)| a * b).sum();
    Ok(Deformation { field: VectorField::from_interleaved(&v), grad_norm_sq })
}
