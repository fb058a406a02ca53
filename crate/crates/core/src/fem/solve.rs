//! Jacobi-preconditioned conjugate gradients for the symmetric systems of
//! this crate: pure-Neumann problems with a zero-mean constraint and
//! Dirichlet-constrained problems.

use super::{CsrMatrix, NodalField};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `|b - A x| / |b|`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * n`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iter: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Constraint metadata attached to a [`SparseSystem`].
#[derive(Clone, Debug)]
pub enum Constraint {
    None,
    /// Solutions satisfy `weights . y = 0`.
    ZeroMean { weights: Vec<f64> },
    /// `x[dofs[k]] = values[k]`.
    Dirichlet { dofs: Vec<usize>, values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub constraint: Constraint,
}

impl SparseSystem {
    pub fn zero_mean(matrix: CsrMatrix, weights: Vec<f64>) -> Self {
        SparseSystem { matrix, constraint: Constraint::ZeroMean { weights } }
    }

    pub fn dirichlet(matrix: CsrMatrix, dofs: Vec<usize>, values: Vec<f64>) -> Self {
        SparseSystem { matrix, constraint: Constraint::Dirichlet { dofs, values } }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// PCG on `A x = b` for the unknowns with `free[i]`; fixed entries of `x`
/// are left untouched and `b` is expected to be zero there. With
/// `consistent_singular`, the residual is kept orthogonal to constants.
fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    free: Option<&[bool]>,
    consistent_singular: bool,
    opts: &SolverOptions,
) -> Result<SolveStats> {
    let n = a.dim();
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let is_free = |i: usize| free.is_none_or(|f| f[i]);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let diag = a.diagonal();
    let mut inv_diag = vec![0.0; n];
    for i in 0..n {
        if is_free(i) {
            if !(diag[i] > 0.0) {
                return Err(Error::Singular(format!("non-positive diagonal {} at dof {i}", diag[i])));
            }
            inv_diag[i] = 1.0 / diag[i];
        }
    }
    let mask = |v: &mut [f64]| {
        if let Some(f) = free {
            v.iter_mut().zip(f).for_each(|(x, &keep)| {
                if !keep {
                    *x = 0.0
                }
            });
        }
    };

    let mut ax = a.mul(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    mask(&mut r);
    if consistent_singular {
        remove_mean(&mut r);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / bnorm;
    let mut it = 0;
    while res > opts.tol {
        if it >= max_iter {
            return Err(Error::NotConverged { iterations: it, residual: res });
        }
        a.matvec(&p, &mut ax);
        mask(&mut ax);
        let pap = dot(&p, &ax);
        if !(pap > 0.0) {
            return Err(Error::Singular(format!("non-positive curvature {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        if consistent_singular {
            remove_mean(&mut r);
        }
        z.iter_mut().zip(r.iter().zip(&inv_diag)).for_each(|(zi, (ri, di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        res = norm(&r) / bnorm;
        it += 1;
    }
    Ok(SolveStats { iterations: it, residual: res })
}

/// Solution of a pure-Neumann problem in the zero-mean space.
#[derive(Clone, Debug)]
pub struct ZeroMeanSolution {
    pub field: NodalField,
    /// Multiplier `lambda` of the mean constraint in `K y + lambda w = b`.
    pub multiplier: f64,
    pub stats: SolveStats,
}

/// Solves `K y + lambda w = rhs`, `w . y = 0` for a stiffness `K` whose
/// kernel is the constants.
pub fn solve_zero_mean(system: &SparseSystem, rhs: &[f64], opts: &SolverOptions) -> Result<ZeroMeanSolution> {
    let Constraint::ZeroMean { weights } = &system.constraint else {
        return Err(Error::Parameter("solve_zero_mean needs a zero-mean system".into()));
    };
    let k = &system.matrix;
    let total: f64 = weights.iter().sum();
    // 1^T K = 0, so testing with constants isolates the multiplier.
    let multiplier = rhs.iter().sum::<f64>() / total;
    let b: Vec<f64> = rhs.iter().zip(weights).map(|(r, w)| r - multiplier * w).collect();
    let mut y = vec![0.0; k.dim()];
    let bnorm = norm(rhs);
    let mut local = *opts;
    // converge against |rhs| rather than the compatible part
    if norm(&b) > 0.0 {
        local.tol = opts.tol * bnorm / norm(&b);
    }
    let stats = pcg(k, &b, &mut y, None, true, &local)?;
    let mean = dot(weights, &y) / total;
    y.iter_mut().for_each(|v| *v -= mean);
    Ok(ZeroMeanSolution { field: NodalField::new(y), multiplier, stats })
}

/// Solves a Dirichlet-tagged system: constrained dofs take their prescribed
/// values, the free block is solved by PCG.
pub fn solve_dirichlet(system: &SparseSystem, rhs: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let Constraint::Dirichlet { dofs, values } = &system.constraint else {
        return Err(Error::Parameter("solve_dirichlet needs a Dirichlet system".into()));
    };
    if dofs.is_empty() {
        return Err(Error::Parameter("no constrained dofs".into()));
    }
    let a = &system.matrix;
    let n = a.dim();
    let mut free = vec![true; n];
    let mut x0 = vec![0.0; n];
    for (&d, &v) in dofs.iter().zip(values) {
        free[d] = false;
        x0[d] = v;
    }
    let ax0 = a.mul(&x0);
    let b: Vec<f64> = (0..n).map(|i| if free[i] { rhs[i] - ax0[i] } else { 0.0 }).collect();
    let mut dx = vec![0.0; n];
    let stats = pcg(a, &b, &mut dx, Some(&free), false, opts)?;
    Ok(((0..n).map(|i| x0[i] + dx[i]).collect(), stats))
}
