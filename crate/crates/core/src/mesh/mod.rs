//! Labeled triangle meshes of the hold-all domain.
//!
//! A [`TriMesh`] stores vertex coordinates together with connectivity that
//! never changes during optimization. Connectivity-derived data (interface
//! edges, boundary flags, vertex-to-triangle adjacency) lives in a shared
//! [`Topology`] so deformed copies of a mesh are cheap.

mod generate;
mod io;
mod locate;
mod quality;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fem::{SparsityPattern, VectorField};

pub use generate::{generate_mesh, Inclusion};
pub use io::{parse_mesh, parse_mesh_lenient, write_mesh};
pub use locate::{locate_point, Location, PointLocator};
pub use quality::{aspect_ratio, triangle_quality, MeshQualityReport};

pub type Point = [f64; 2];

/// Region label of the outer material.
pub const OUTER_LABEL: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub label: u32,
}

/// An edge shared by two triangles carrying different region labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterfaceEdge {
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
}

/// Connectivity-only data, invariant under vertex motion.
#[derive(Debug)]
pub struct Topology {
    pub interface_edges: Vec<InterfaceEdge>,
    pub on_boundary: Vec<bool>,
    pub on_interface: Vec<bool>,
    pub vertex_triangles: Vec<Vec<usize>>,
    pub max_label: u32,
    /// Scalar (index 0) and 2-vector (index 1) sparsity patterns.
    pub(crate) patterns: [OnceLock<Arc<SparsityPattern>>; 2],
}

/// Per-triangle geometry: signed area and gradients of the barycentric
/// coordinates (the P1 hat-function gradients).
#[derive(Clone, Copy, Debug)]
pub struct TriGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    boundary_edges: Vec<[usize; 2]>,
    topology: Arc<Topology>,
}

/// A problem found by [`TriMesh::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    InvertedTriangle { triangle: usize, area: f64 },
    NonFiniteVertex { vertex: usize },
    OpenInterfaceLoop { label: u32, vertex: usize, degree: usize },
    InterfaceOnBoundary { vertex: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::InvertedTriangle { triangle, area } => {
                write!(f, "inverted triangle {} (area {:e})", triangle + 1, area)
            }
            Violation::NonFiniteVertex { vertex } => write!(f, "non-finite vertex {}", vertex + 1),
            Violation::OpenInterfaceLoop { label, vertex, degree } => write!(
                f,
                "interface of region {label} is open at vertex {} (degree {degree})",
                vertex + 1
            ),
            Violation::InterfaceOnBoundary { vertex } => {
                write!(f, "interface vertex {} lies on the outer boundary", vertex + 1)
            }
        }
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    /// Builds a mesh, checking index ranges, orientation and that the listed
    /// boundary edges are exactly the edges owned by a single triangle.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        Self::build(vertices, triangles, boundary_edges, true)
    }

    /// Like [`TriMesh::new`] but accepts inverted triangles, for inspecting
    /// meshes that a destructive step has already broken.
    pub fn new_allow_inverted(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        Self::build(vertices, triangles, boundary_edges, false)
    }

    fn build(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<[usize; 2]>,
        check_orientation: bool,
    ) -> Result<Self> {
        let n = vertices.len();
        if n == 0 || triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for (id, t) in triangles.iter().enumerate() {
            if t.vertices.iter().any(|&v| v >= n) {
                return Err(Error::Parameter(format!(
                    "triangle {} references a vertex out of range",
                    id + 1
                )));
            }
            let [a, b, c] = t.vertices;
            let area = signed_area(vertices[a], vertices[b], vertices[c]);
            if check_orientation && !(area > 0.0) {
                return Err(Error::InvertedTriangle { id: id + 1, area });
            }
        }
        let topology = Topology::build(n, &triangles, &boundary_edges)?;
        Ok(TriMesh { vertices, triangles, boundary_edges, topology: Arc::new(topology) })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn interface_edges(&self) -> &[InterfaceEdge] {
        &self.topology.interface_edges
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Sparsity pattern for `dofs_per_vertex` (1 or 2) unknowns per vertex,
    /// shared by every mesh with this connectivity.
    pub fn pattern(&self, dofs_per_vertex: usize) -> Arc<SparsityPattern> {
        assert!((1..=2).contains(&dofs_per_vertex));
        let cell = &self.topology.patterns[dofs_per_vertex - 1];
        Arc::clone(cell.get_or_init(|| Arc::new(SparsityPattern::for_mesh(self, dofs_per_vertex))))
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.topology.on_boundary[v]
    }

    pub fn is_interface_vertex(&self, v: usize) -> bool {
        self.topology.on_interface[v]
    }

    /// Largest region label present (the number of inclusions N for
    /// generated meshes).
    pub fn max_label(&self) -> u32 {
        self.topology.max_label
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Signed area and hat-function gradients of triangle `t`.
    pub fn geometry(&self, t: usize) -> TriGeometry {
        let [p0, p1, p2] = self.corners(t);
        let area = signed_area(p0, p1, p2);
        let inv = 1.0 / (2.0 * area);
        // grad(lambda_i) = rot90(p_{i+2} - p_{i+1}) / (2A)
        let g = |a: Point, b: Point| [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
        TriGeometry { area, grads: [g(p1, p2), g(p2, p0), g(p0, p1)] }
    }

    /// Returns a mesh with vertex positions `x - t V(x)`. Connectivity and
    /// labels are shared; boundary vertices never move.
    pub fn deform(&self, field: &VectorField, t: f64) -> Result<TriMesh> {
        if field.len() != self.n_vertices() {
            return Err(Error::FieldLength { expected: self.n_vertices(), got: field.len() });
        }
        let vertices = self
            .vertices
            .iter()
            .zip(field.values())
            .enumerate()
            .map(|(i, (x, v))| {
                if self.topology.on_boundary[i] {
                    *x
                } else {
                    [x[0] - t * v[0], x[1] - t * v[1]]
                }
            })
            .collect();
        Ok(self.with_vertices(vertices))
    }

    /// Same connectivity, new coordinates. No validity checks.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> TriMesh {
        assert_eq!(vertices.len(), self.vertices.len());
        TriMesh {
            vertices,
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
            topology: Arc::clone(&self.topology),
        }
    }

    /// Checks orientation, finiteness and interface closedness, returning
    /// every violation found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (v, x) in self.vertices.iter().enumerate() {
            if !x[0].is_finite() || !x[1].is_finite() {
                out.push(Violation::NonFiniteVertex { vertex: v });
            }
        }
        for t in 0..self.n_triangles() {
            let area = self.signed_area(t);
            if !(area > 0.0) {
                out.push(Violation::InvertedTriangle { triangle: t, area });
            }
        }
        for label in 1..=self.topology.max_label {
            let mut degree: HashMap<usize, usize> = HashMap::new();
            for e in &self.topology.interface_edges {
                let labels = e.triangles.map(|t| self.triangles[t].label);
                if labels.contains(&label) {
                    for v in e.vertices {
                        *degree.entry(v).or_default() += 1;
                    }
                }
            }
            let mut open: Vec<_> = degree.into_iter().filter(|&(_, d)| d % 2 == 1).collect();
            open.sort_unstable();
            out.extend(
                open.into_iter()
                    .map(|(vertex, degree)| Violation::OpenInterfaceLoop { label, vertex, degree }),
            );
        }
        for v in 0..self.n_vertices() {
            if self.topology.on_interface[v] && self.topology.on_boundary[v] {
                out.push(Violation::InterfaceOnBoundary { vertex: v });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Connected components of the interface-edge graph, each as a sorted
    /// vertex list.
    pub fn interface_loops(&self) -> Vec<Vec<usize>> {
        let n = self.n_vertices();
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in &self.topology.interface_edges {
            let [a, b] = e.vertices;
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = vec![false; n];
        let mut starts: Vec<usize> = adj.keys().copied().collect();
        starts.sort_unstable();
        let mut loops = Vec::new();
        for s in starts {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &adj[&v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            loops.push(comp);
        }
        loops
    }

    /// Vertices allowed to carry a nonzero shape-derivative entry: interior
    /// vertices with an incident triangle touching the interface.
    pub fn active_vertices(&self) -> Vec<bool> {
        let topo = &self.topology;
        (0..self.n_vertices())
            .map(|v| {
                !topo.on_boundary[v]
                    && topo.vertex_triangles[v].iter().any(|&t| {
                        self.triangles[t].vertices.iter().any(|&w| topo.on_interface[w])
                    })
            })
            .collect()
    }
}

impl Topology {
    fn build(n: usize, triangles: &[Triangle], boundary_edges: &[[usize; 2]]) -> Result<Self> {
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut vertex_triangles = vec![Vec::new(); n];
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            for (p, q) in [(a, b), (b, c), (c, a)] {
                edges.entry(edge_key(p, q)).or_default().push(t);
            }
            for v in tri.vertices {
                vertex_triangles[v].push(t);
            }
        }
        let mut on_boundary = vec![false; n];
        let mut listed = std::collections::HashSet::new();
        for (i, &[a, b]) in boundary_edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::Parameter(format!("boundary edge {} out of range", i + 1)));
            }
            match edges.get(&edge_key(a, b)) {
                Some(ts) if ts.len() == 1 => {}
                _ => {
                    return Err(Error::Parameter(format!(
                        "dangling boundary edge {} ({}, {})",
                        i + 1,
                        a + 1,
                        b + 1
                    )))
                }
            }
            listed.insert(edge_key(a, b));
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        let mut interface_edges = Vec::new();
        let mut on_interface = vec![false; n];
        for key in keys {
            let ts = &edges[&key];
            match ts.len() {
                1 if !listed.contains(&key) => {
                    return Err(Error::Parameter(format!(
                        "edge ({}, {}) bounds one triangle but is not a listed boundary edge",
                        key.0 + 1,
                        key.1 + 1
                    )))
                }
                1 => {}
                2 => {
                    if triangles[ts[0]].label != triangles[ts[1]].label {
                        interface_edges.push(InterfaceEdge {
                            vertices: [key.0, key.1],
                            triangles: [ts[0], ts[1]],
                        });
                        on_interface[key.0] = true;
                        on_interface[key.1] = true;
                    }
                }
                _ => {
                    return Err(Error::Parameter(format!(
                        "edge ({}, {}) shared by {} triangles",
                        key.0 + 1,
                        key.1 + 1,
                        ts.len()
                    )))
                }
            }
        }
        let max_label = triangles.iter().map(|t| t.label).max().unwrap_or(0);
        Ok(Topology {
            interface_edges,
            on_boundary,
            on_interface,
            vertex_triangles,
            max_label,
            patterns: Default::default(),
        })
    }
}
