//! State and adjoint solves, the tracking objective, target measurements and
//! the volume form of the shape derivative.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass, assemble_region_stiffness, gradient_on, l2_inner, midpoint_product,
    nodal_weights, solve_zero_mean, CsrMatrix, NodalField, SolverOptions, SparseSystem, Source,
    VectorField,
};
use crate::mesh::{PointLocator, TriMesh};
use crate::stochastics::Scenario;

/// Scenario-independent operators of one mesh. Building them once lets the
/// stiffness for any scenario be formed as a linear combination.
#[derive(Clone, Debug)]
pub struct PdeOperators {
    mesh: TriMesh,
    mass: CsrMatrix,
    weights: Vec<f64>,
    /// Unit-coefficient stiffness per region label.
    regions: Vec<CsrMatrix>,
    /// Load for `f = 0`, `g = 1`.
    unit_flux: Vec<f64>,
    /// Load for `f = 1`, `g = 0`.
    unit_source: Vec<f64>,
}

impl PdeOperators {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        let regions = (0..=mesh.max_label()).map(|l| assemble_region_stiffness(mesh, l)).collect();
        Ok(PdeOperators {
            mesh: mesh.clone(),
            mass: assemble_mass(mesh),
            weights: nodal_weights(mesh),
            regions,
            unit_flux: assemble_load(mesh, Source::Constant(0.0), 1.0)?,
            unit_source: assemble_load(mesh, Source::Constant(1.0), 0.0)?,
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Stiffness with the piecewise-constant conductivity of `scenario`.
    pub fn stiffness(&self, scenario: &Scenario) -> Result<SparseSystem> {
        let coeffs: Vec<f64> = (0..self.regions.len()).map(|l| scenario.kappa_of(l as u32)).collect();
        if let Some((l, &k)) = coeffs.iter().enumerate().find(|(_, &k)| !(k > 0.0)) {
            let t = self.mesh.triangles().iter().position(|tri| tri.label as usize == l).unwrap_or(0);
            return Err(Error::NonPositiveCoefficient { triangle: t + 1, value: k });
        }
        let terms: Vec<(f64, &CsrMatrix)> = coeffs.iter().copied().zip(&self.regions).collect();
        Ok(SparseSystem::zero_mean(CsrMatrix::combination(&terms), self.weights.clone()))
    }

    pub fn load(&self, scenario: &Scenario) -> Vec<f64> {
        self.unit_flux
            .iter()
            .zip(&self.unit_source)
            .map(|(b, s)| scenario.g * b + scenario.f * s)
            .collect()
    }

    pub fn state(&self, scenario: &Scenario, opts: &SolverOptions) -> Result<StateSolution> {
        let k = self.stiffness(scenario)?;
        let sol = solve_zero_mean(&k, &self.load(scenario), opts)?;
        Ok(StateSolution { y: sol.field, multiplier: sol.multiplier })
    }

    /// Adjoint with right side `M (y - ybar)`.
    pub fn adjoint(&self, stiffness: &SparseSystem, y: &NodalField, ybar: &NodalField, opts: &SolverOptions) -> Result<NodalField> {
        let e = y.sub(ybar);
        Ok(solve_zero_mean(stiffness, &self.mass.mul(e.values()), opts)?.field)
    }

    /// State, adjoint and objective for one scenario.
    pub fn solve(&self, scenario: &Scenario, ybar: &NodalField, opts: &SolverOptions) -> Result<PdeSolution> {
        let k = self.stiffness(scenario)?;
        let state = solve_zero_mean(&k, &self.load(scenario), opts)?;
        let p = self.adjoint(&k, &state.field, ybar, opts)?;
        let objective = objective_value(&self.mesh, &state.field, ybar);
        Ok(PdeSolution { y: state.field, p, multiplier: state.multiplier, objective, scenario: scenario.clone() })
    }
}

#[derive(Clone, Debug)]
pub struct StateSolution {
    pub y: NodalField,
    /// Mean-constraint multiplier; nonzero when the Neumann data are
    /// incompatible.
    pub multiplier: f64,
}

#[derive(Clone, Debug)]
pub struct PdeSolution {
    pub y: NodalField,
    pub p: NodalField,
    pub multiplier: f64,
    pub objective: f64,
    pub scenario: Scenario,
}

/// Zero-mean state for one scenario.
pub fn solve_state(mesh: &TriMesh, scenario: &Scenario, opts: &SolverOptions) -> Result<StateSolution> {
    PdeOperators::new(mesh)?.state(scenario, opts)
}

/// Zero-mean adjoint `p` with `a(p, v) = int (y - ybar) v`.
pub fn solve_adjoint(mesh: &TriMesh, scenario: &Scenario, y: &NodalField, ybar: &NodalField, opts: &SolverOptions) -> Result<NodalField> {
    y.check(mesh)?;
    ybar.check(mesh)?;
    let ops = PdeOperators::new(mesh)?;
    ops.adjoint(&ops.stiffness(scenario)?, y, ybar, opts)
}

/// `1/2 int (y - ybar)^2`.
pub fn objective_value(mesh: &TriMesh, y: &NodalField, ybar: &NodalField) -> f64 {
    let e = y.sub(ybar);
    0.5 * l2_inner(mesh, e.values(), e.values())
}

/// Measurement on a target geometry, evaluable anywhere in the square.
#[derive(Clone, Debug)]
pub struct TargetMeasurement {
    pub values: NodalField,
    pub scenario: Option<Scenario>,
    locator: PointLocator,
}

impl TargetMeasurement {
    pub fn new(mesh: &TriMesh, values: NodalField, scenario: Option<Scenario>) -> Result<Self> {
        values.check(mesh)?;
        Ok(TargetMeasurement { values, scenario, locator: PointLocator::new(mesh)? })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.locator.mesh()
    }

    /// Interpolated value and gradient of the target field at `x`.
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let loc = self.locator.locate(x);
        let mesh = self.locator.mesh();
        let vs = mesh.triangles()[loc.triangle].vertices;
        let v = (0..3).map(|a| loc.bary[a] * self.values[vs[a]]).sum();
        (v, gradient_on(mesh, self.values.values(), loc.triangle))
    }
}

/// Solves the state on the target mesh.
pub fn generate_target(target_mesh: &TriMesh, scenario: &Scenario, opts: &SolverOptions) -> Result<TargetMeasurement> {
    let y = solve_state(target_mesh, scenario, opts)?.y;
    TargetMeasurement::new(target_mesh, y, Some(scenario.clone()))
}

/// Target values at the vertices of `mesh`, shifted to zero mean on it,
/// together with the target gradients at those vertices.
#[derive(Clone, Debug)]
pub struct TransferredTarget {
    pub ybar: NodalField,
    pub gradients: Vec<[f64; 2]>,
}

pub fn transfer_target(target: &TargetMeasurement, mesh: &TriMesh) -> NodalField {
    transfer_target_with_gradient(target, mesh).ybar
}

pub fn transfer_target_with_gradient(target: &TargetMeasurement, mesh: &TriMesh) -> TransferredTarget {
    let (mut vals, mut gradients) = (Vec::with_capacity(mesh.n_vertices()), Vec::with_capacity(mesh.n_vertices()));
    for &x in mesh.vertices() {
        let (v, g) = target.eval(x);
        vals.push(v);
        gradients.push(g);
    }
    let w = nodal_weights(mesh);
    let mean = vals.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / w.iter().sum::<f64>();
    vals.iter_mut().for_each(|v| *v -= mean);
    TransferredTarget { ybar: NodalField::new(vals), gradients }
}

/// How the measurement's motion under a node displacement enters the
/// derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetGradient {
    /// Gradient of the target field at each moving vertex; the exact
    /// derivative of the nodal transfer.
    #[default]
    Transfer,
    /// Element-wise gradient of the transferred P1 field on the current mesh.
    Interpolant,
}

/// Derivative of the objective along every nodal hat direction.
#[derive(Clone, Debug)]
pub struct ShapeDerivativeLoad {
    pub load: VectorField,
    pub active: Vec<bool>,
}

impl ShapeDerivativeLoad {
    /// `dJ[V]` for a nodal vector field `V`.
    pub fn apply(&self, v: &VectorField) -> f64 {
        self.load.dot(v)
    }

    pub fn max_abs(&self) -> f64 {
        self.load.max_abs()
    }
}

/// Inputs of [`assemble_shape_derivative`].
#[derive(Clone, Copy, Debug)]
pub struct DerivativeInputs<'a> {
    pub scenario: &'a Scenario,
    pub y: &'a NodalField,
    pub p: &'a NodalField,
    pub ybar: &'a NodalField,
    /// Mean-constraint multiplier of the state solve.
    pub multiplier: f64,
    /// Target gradients at the vertices; required for
    /// [`TargetGradient::Transfer`].
    pub target_gradients: Option<&'a [[f64; 2]]>,
}

/// Volume shape derivative restricted to the vertices whose hat support
/// touches the interface. `p` is the adjoint driven by `M (y - ybar)`.
pub fn assemble_shape_derivative(mesh: &TriMesh, inputs: &DerivativeInputs, mass: Option<&CsrMatrix>) -> Result<ShapeDerivativeLoad> {
    let DerivativeInputs { scenario, y, p, ybar, multiplier, target_gradients } = *inputs;
    for f in [y, p, ybar] {
        f.check(mesh)?;
    }
    if let Some(g) = target_gradients {
        if g.len() != mesh.n_vertices() {
            return Err(Error::FieldLength { expected: mesh.n_vertices(), got: g.len() });
        }
    }
    let active = mesh.active_vertices();
    let e = y.sub(ybar);
    // The multiplier acts like an extra volume source: K y = b - lambda w.
    let f_eff = scenario.f - multiplier;
    let mut load = vec![[0.0f64; 2]; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let vs = tri.vertices;
        if !vs.iter().any(|&v| active[v]) {
            continue;
        }
        let local = element_kernel(
            mesh,
            t,
            ElementData {
                kappa: scenario.kappa_of(tri.label),
                y: y.values(),
                p: p.values(),
                e: e.values(),
                ybar: if target_gradients.is_none() { Some(ybar.values()) } else { None },
                f_eff,
            },
        );
        for a in 0..3 {
            if active[vs[a]] {
                load[vs[a]][0] += local[a][0];
                load[vs[a]][1] += local[a][1];
            }
        }
    }
    if let Some(grads) = target_gradients {
        let owned;
        let m = match mass {
            Some(m) => m,
            None => {
                owned = assemble_mass(mesh);
                &owned
            }
        };
        let me = m.mul(e.values());
        for v in 0..mesh.n_vertices() {
            if active[v] {
                load[v][0] -= me[v] * grads[v][0];
                load[v][1] -= me[v] * grads[v][1];
            }
        }
    }
    Ok(ShapeDerivativeLoad { load: VectorField::new(load), active })
}

struct ElementData<'a> {
    kappa: f64,
    y: &'a [f64],
    p: &'a [f64],
    e: &'a [f64],
    /// Present when the target gradient is taken from the P1 interpolant.
    ybar: Option<&'a [f64]>,
    f_eff: f64,
}

/// Contribution of triangle `t` to `dJ[phi_a e_k]` for its three vertices.
fn element_kernel(mesh: &TriMesh, t: usize, d: ElementData) -> [[f64; 2]; 3] {
    let vs = mesh.triangles()[t].vertices;
    let geo = mesh.geometry(t);
    let area = geo.area;
    let gy = gradient_on(mesh, d.y, t);
    let gp = gradient_on(mesh, d.p, t);
    let ev = vs.map(|v| d.e[v]);
    let pv = vs.map(|v| d.p[v]);
    let int_p = area * (pv[0] + pv[1] + pv[2]) / 3.0;
    let div_coeff =
        0.5 * midpoint_product(area, ev, ev) - area * d.kappa * (gy[0] * gp[0] + gy[1] * gp[1]) + d.f_eff * int_p;
    let gybar = d.ybar.map(|yb| gradient_on(mesh, yb, t));
    let mut out = [[0.0; 2]; 3];
    for (a, row) in out.iter_mut().enumerate() {
        let ga = geo.grads[a];
        let ga_gy = ga[0] * gy[0] + ga[1] * gy[1];
        let ga_gp = ga[0] * gp[0] + ga[1] * gp[1];
        let mut phi = [0.0; 3];
        phi[a] = 1.0;
        let e_phi = midpoint_product(area, ev, phi);
        for k in 0..2 {
            row[k] = area * d.kappa * (gy[k] * ga_gp + ga_gy * gp[k]) + ga[k] * div_coeff;
            if let Some(gb) = gybar {
                row[k] -= gb[k] * e_phi;
            }
        }
    }
    out
}

/// Everything the optimizer needs from one scenario on one mesh.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub pde: PdeSolution,
    pub derivative: ShapeDerivativeLoad,
}

/// Solves state and adjoint and assembles the derivative.
pub fn evaluate(
    ops: &PdeOperators,
    target: &TransferredTarget,
    scenario: &Scenario,
    mode: TargetGradient,
    opts: &SolverOptions,
) -> Result<Evaluation> {
    let pde = ops.solve(scenario, &target.ybar, opts)?;
    let inputs = DerivativeInputs {
        scenario,
        y: &pde.y,
        p: &pde.p,
        ybar: &target.ybar,
        multiplier: pde.multiplier,
        target_gradients: match mode {
            TargetGradient::Transfer => Some(&target.gradients),
            TargetGradient::Interpolant => None,
        },
    };
    let derivative = assemble_shape_derivative(ops.mesh(), &inputs, Some(ops.mass()))?;
    Ok(Evaluation { pde, derivative })
}
