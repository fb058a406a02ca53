//! Compressed-row sparse matrices over a mesh-derived sparsity pattern.

use std::sync::Arc;

use crate::mesh::TriMesh;

/// Row-compressed column structure. Column indices within a row are sorted.
#[derive(Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern of P1 couplings with `dofs_per_vertex` interleaved unknowns
    /// per vertex (dof `dofs_per_vertex * v + k`).
    pub fn for_mesh(mesh: &TriMesh, dofs_per_vertex: usize) -> Self {
        let nv = mesh.n_vertices();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for t in mesh.triangles() {
            for &a in &t.vertices {
                adj[a].extend_from_slice(&t.vertices);
            }
        }
        let d = dofs_per_vertex;
        let n = nv * d;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for nbrs in adj.iter_mut() {
            nbrs.sort_unstable();
            nbrs.dedup();
            for _ in 0..d {
                for &b in nbrs.iter() {
                    col_idx.extend((0..d).map(|l| d * b + l));
                }
                row_ptr.push(col_idx.len());
            }
        }
        SparsityPattern { n, row_ptr, col_idx }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }
}

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Adds `v` to entry `(i, j)`; panics when the entry is outside the
    /// pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let (s, e) = (p.row_ptr[i], p.row_ptr[i + 1]);
            *yi = p.col_idx[s..e]
                .iter()
                .zip(&self.values[s..e])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul(y)).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for &j in self.pattern.row(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `sum_k c_k A_k` over matrices sharing one pattern.
    pub fn combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let pattern = Arc::clone(&terms[0].1.pattern);
        let mut values = vec![0.0; pattern.nnz()];
        for (c, m) in terms {
            assert!(Arc::ptr_eq(&pattern, &m.pattern) || *pattern == *m.pattern);
            for (v, a) in values.iter_mut().zip(&m.values) {
                *v += c * a;
            }
        }
        CsrMatrix { pattern, values }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for &j in self.pattern.row(i) {
                row[j] = self.get(i, j);
            }
        }
        d
    }
}
