use std::ops::Index;

use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};

/// P1 scalar field: one value per mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        NodalField { values }
    }

    pub fn zeros(n: usize) -> Self {
        NodalField { values: vec![0.0; n] }
    }

    pub fn from_fn(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Self {
        NodalField { values: mesh.vertices().iter().map(|&p| f(p)).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        if self.len() != mesh.n_vertices() {
            return Err(Error::FieldLength { expected: mesh.n_vertices(), got: self.len() });
        }
        Ok(())
    }

    pub fn sub(&self, other: &NodalField) -> NodalField {
        NodalField::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> NodalField {
        NodalField::new(self.values.iter().map(|a| c * a).collect())
    }
}

impl Index<usize> for NodalField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// P1 vector field: one 2-vector per mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn new(values: Vec<[f64; 2]>) -> Self {
        VectorField { values }
    }

    pub fn zeros(n: usize) -> Self {
        VectorField { values: vec![[0.0; 2]; n] }
    }

    /// From interleaved dofs `[x0, y0, x1, y1, ...]`.
    pub fn from_interleaved(flat: &[f64]) -> Self {
        VectorField { values: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect() }
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| *v).collect()
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, k: usize) -> NodalField {
        NodalField::new(self.values.iter().map(|v| v[k]).collect())
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField::new(self.values.iter().map(|v| [c * v[0], c * v[1]]).collect())
    }

    /// Euclidean dot product of the coefficient vectors.
    pub fn dot(&self, other: &VectorField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }
}

impl Index<usize> for VectorField {
    type Output = [f64; 2];

    fn index(&self, i: usize) -> &[f64; 2] {
        &self.values[i]
    }
}
