use super::{signed_area, Point, TriMesh};

/// Circumradius over twice the inradius; 1 for an equilateral triangle.
/// `None` for triangles with non-positive signed area.
pub fn aspect_ratio(a: Point, b: Point, c: Point) -> Option<f64> {
    let area = signed_area(a, b, c);
    if !(area > 0.0) {
        return None;
    }
    let la = (b[0] - c[0]).hypot(b[1] - c[1]);
    let lb = (a[0] - c[0]).hypot(a[1] - c[1]);
    let lc = (a[0] - b[0]).hypot(a[1] - b[1]);
    let s = 0.5 * (la + lb + lc);
    // R = abc / 4A, r = A / s
    Some(la * lb * lc * s / (8.0 * area * area))
}

#[derive(Clone, Debug)]
pub struct MeshQualityReport {
    /// Per-triangle aspect ratio, `None` for inverted or degenerate ones.
    pub ratios: Vec<Option<f64>>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub inverted: usize,
}

impl MeshQualityReport {
    /// Worst-element quality in `[0, 1]`: `1 / max` ratio, 0 when any element
    /// is inverted.
    pub fn min_quality(&self) -> f64 {
        if self.inverted > 0 || !self.max.is_finite() {
            0.0
        } else {
            1.0 / self.max
        }
    }
}

pub fn triangle_quality(mesh: &TriMesh) -> MeshQualityReport {
    let ratios: Vec<Option<f64>> = (0..mesh.n_triangles())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            aspect_ratio(a, b, c)
        })
        .collect();
    let valid: Vec<f64> = ratios.iter().flatten().copied().collect();
    let inverted = ratios.len() - valid.len();
    let (min, max, mean) = if valid.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            valid.iter().copied().fold(f64::INFINITY, f64::min),
            valid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            valid.iter().sum::<f64>() / valid.len() as f64,
        )
    };
    MeshQualityReport { ratios, min, mean, max, inverted }
}
