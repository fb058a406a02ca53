//! The stochastic shape-gradient loop.

mod estimate;
mod step;

use std::sync::Arc;

pub use estimate::{estimate_expectation, Estimate};
pub use step::{armijo_backtrack, propose_step, Backtrack, StepRule, DEFAULT_MAX_BACKTRACKS};

use crate::deformation::{assemble_elasticity, solve_deformation, solve_mu_field, Deformation, LameField};
use crate::error::{Error, Result};
use crate::fem::{l2_norm_vector, SolverOptions, SparseSystem};
use crate::mesh::{triangle_quality, TriMesh};
use crate::shape_calculus::{
    evaluate, transfer_target_with_gradient, Evaluation, PdeOperators, TargetGradient, TargetMeasurement,
    TransferredTarget,
};
use crate::stochastics::{stream, Scenario, ScenarioDistribution, StreamKey};

/// Number of step halvings the mesh guard tries before giving up.
pub const GUARD_HALVINGS: usize = 30;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub initial_mesh: TriMesh,
    pub target: Arc<TargetMeasurement>,
    pub distribution: ScenarioDistribution,
    pub rule: StepRule,
    pub iterations: usize,
    pub seed: u64,
    /// Samples per expectation estimate; 0 disables estimation.
    pub estimate_m: usize,
    /// Estimate every this many iterations; 0 means only at the start and
    /// the end.
    pub estimate_every: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub solver: SolverOptions,
    /// Halve steps that would invert triangles.
    pub guard: bool,
    pub target_gradient: TargetGradient,
    /// Stop once `|V|_L2` drops to this value.
    pub grad_tol: Option<f64>,
}

impl RunConfig {
    /// Defaults for everything but the geometry, data and step rule.
    pub fn new(initial_mesh: TriMesh, target: Arc<TargetMeasurement>, distribution: ScenarioDistribution, rule: StepRule, iterations: usize) -> Self {
        RunConfig {
            initial_mesh,
            target,
            distribution,
            rule,
            iterations,
            seed: 0,
            estimate_m: 0,
            estimate_every: 0,
            mu_min: 10.0,
            mu_max: 25.0,
            solver: SolverOptions::default(),
            guard: true,
            target_gradient: TargetGradient::default(),
            grad_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        if self.iterations == 0 {
            return Err(Error::Parameter("iteration count must be at least 1".into()));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= self.mu_max) {
            return Err(Error::Parameter(format!("need 0 < mu_min <= mu_max, got {}, {}", self.mu_min, self.mu_max)));
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Parameter(format!("solver tolerance must be positive, got {}", self.solver.tol)));
        }
        if !self.initial_mesh.is_valid() {
            return Err(Error::Parameter("initial mesh is invalid".into()));
        }
        Ok(())
    }

    fn n_inclusions(&self) -> usize {
        self.initial_mesh.max_label() as usize
    }
}

/// One row of the convergence log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    /// Step actually taken; 0 when rejected.
    pub step: f64,
    /// `J(u_n, xi_n)` before the update.
    pub j_sample: f64,
    /// `a(V, V)`, the squared gradient norm in the elasticity metric.
    pub grad_norm_sq: f64,
    pub v_l2: f64,
    /// Armijo reductions, or guard halvings for Robbins-Monro.
    pub backtracks: usize,
    /// Minimum quality of the mesh after the iteration.
    pub min_quality: f64,
    pub accepted: bool,
    /// Objective on the accepted trial mesh (line-search rules).
    pub j_trial: Option<f64>,
    pub j_hat: Option<f64>,
    pub v_hat: Option<f64>,
}

/// Scenario-independent data of the current mesh.
#[derive(Clone, Debug)]
pub struct MeshState {
    pub ops: PdeOperators,
    pub target: TransferredTarget,
    pub lame: LameField,
    pub elasticity: SparseSystem,
}

impl MeshState {
    pub fn new(mesh: &TriMesh, target: &TargetMeasurement, mu_min: f64, mu_max: f64, opts: &SolverOptions) -> Result<Self> {
        let ops = PdeOperators::new(mesh)?;
        let target = transfer_target_with_gradient(target, mesh);
        Self::from_parts(ops, target, mu_min, mu_max, opts)
    }

    fn from_parts(ops: PdeOperators, target: TransferredTarget, mu_min: f64, mu_max: f64, opts: &SolverOptions) -> Result<Self> {
        let lame = solve_mu_field(ops.mesh(), mu_min, mu_max, opts)?;
        let elasticity = assemble_elasticity(ops.mesh(), &lame)?;
        Ok(MeshState { ops, target, lame, elasticity })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.ops.mesh()
    }

    /// State, adjoint, derivative and deformation for one scenario.
    pub fn gradient(&self, scenario: &Scenario, mode: TargetGradient, opts: &SolverOptions) -> Result<(Evaluation, Deformation)> {
        let ev = evaluate(&self.ops, &self.target, scenario, mode, opts)?;
        let def = solve_deformation(&self.elasticity, &ev.derivative, opts)?;
        Ok((ev, def))
    }
}

/// Fields of one iteration, handed to observers before the update.
#[derive(Debug)]
pub struct IterationSnapshot<'a> {
    pub record: &'a IterationRecord,
    pub state: &'a MeshState,
    pub evaluation: &'a Evaluation,
    pub deformation: &'a Deformation,
}

#[derive(Debug)]
pub struct RunResult {
    pub final_mesh: TriMesh,
    pub history: Vec<IterationRecord>,
    /// Estimate on the initial mesh.
    pub initial_estimate: Option<Estimate>,
    /// Estimate on the final mesh.
    pub final_estimate: Option<Estimate>,
    /// Why the run stopped early, if it did.
    pub abort: Option<Error>,
    /// The invalid mesh produced by an unguarded step.
    pub invalid_mesh: Option<TriMesh>,
}

fn estimate_if(cfg: &RunConfig, state: &MeshState, n: usize, force: bool) -> Result<Option<Estimate>> {
    let due = cfg.estimate_every > 0 && n % cfg.estimate_every == 0;
    if cfg.estimate_m == 0 || !(due || force) {
        return Ok(None);
    }
    estimate_expectation(state, &cfg.distribution, cfg.seed, n, cfg.estimate_m, cfg.target_gradient, &cfg.solver).map(Some)
}

pub fn run_optimization(cfg: &RunConfig) -> Result<RunResult> {
    run_optimization_with(cfg, &mut |_| Ok(()))
}

/// Runs the loop, calling `observer` once per iteration before the mesh is
/// updated. Configuration errors are returned as `Err`; failures during
/// the run end it early and are reported in [`RunResult::abort`].
pub fn run_optimization_with(
    cfg: &RunConfig,
    observer: &mut dyn FnMut(&IterationSnapshot) -> Result<()>,
) -> Result<RunResult> {
    cfg.validate()?;
    let opts = &cfg.solver;
    let mut state = MeshState::new(&cfg.initial_mesh, &cfg.target, cfg.mu_min, cfg.mu_max, opts)?;
    let mut result = RunResult {
        final_mesh: cfg.initial_mesh.clone(),
        history: Vec::with_capacity(cfg.iterations),
        initial_estimate: None,
        final_estimate: None,
        abort: None,
        invalid_mesh: None,
    };
    result.initial_estimate = match estimate_if(cfg, &state, 0, true) {
        Ok(e) => e,
        Err(e) => {
            result.abort = Some(e);
            return Ok(result);
        }
    };
    for n in 1..=cfg.iterations {
        match iterate(cfg, n, &state, observer) {
            Ok(step) => {
                if let Some(next) = step.next {
                    state = next;
                }
                let last = n == cfg.iterations
                    || cfg.grad_tol.is_some_and(|tol| step.record.v_l2 <= tol)
                    || step.invalid_mesh.is_some();
                let mut record = step.record;
                if step.invalid_mesh.is_none() {
                    match estimate_if(cfg, &state, n, last) {
                        Ok(Some(e)) => {
                            record.j_hat = Some(e.j_hat);
                            record.v_hat = Some(e.v_hat);
                            if last {
                                result.final_estimate = Some(e);
                            }
                        }
                        Ok(None) => {}
                        Err(e) => {
                            result.history.push(record);
                            result.abort = Some(e);
                            break;
                        }
                    }
                }
                result.history.push(record);
                if let Some(bad) = step.invalid_mesh {
                    let reason = bad.validate().iter().take(3).map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
                    result.invalid_mesh = Some(bad);
                    result.abort = Some(Error::MeshInvalidated { iteration: n, reason });
                    break;
                }
                if last {
                    break;
                }
            }
            Err(e) => {
                result.abort = Some(e);
                break;
            }
        }
    }
    result.final_mesh = state.mesh().clone();
    Ok(result)
}

struct StepOutcome {
    next: Option<MeshState>,
    record: IterationRecord,
    invalid_mesh: Option<TriMesh>,
}

fn iterate(
    cfg: &RunConfig,
    n: usize,
    state: &MeshState,
    observer: &mut dyn FnMut(&IterationSnapshot) -> Result<()>,
) -> Result<StepOutcome> {
    let opts = &cfg.solver;
    let mut rng = stream(cfg.seed, StreamKey::step(n));
    let scenario = cfg.distribution.sample(cfg.n_inclusions(), &mut rng)?;
    let (ev, def) = state.gradient(&scenario, cfg.target_gradient, opts)?;
    let mesh = state.mesh();
    let mut record = IterationRecord {
        n,
        step: 0.0,
        j_sample: ev.pde.objective,
        grad_norm_sq: def.grad_norm_sq,
        v_l2: l2_norm_vector(mesh, &def.field),
        backtracks: 0,
        min_quality: 0.0,
        accepted: false,
        j_trial: None,
        j_hat: None,
        v_hat: None,
    };
    let base = propose_step(&cfg.rule, n);

    let mut next: Option<MeshState> = None;
    let mut invalid_mesh = None;
    if let Some((rho, c, max_bt)) = cfg.rule.line_search() {
        let bt = armijo_backtrack(ev.pde.objective, def.grad_norm_sq, base, rho, c, max_bt, |t| {
            let trial = mesh.deform(&def.field, t)?;
            if !trial.is_valid() {
                return Ok::<_, Error>(None);
            }
            let ops = PdeOperators::new(&trial)?;
            let target = transfer_target_with_gradient(&cfg.target, &trial);
            let j = ops.solve(&scenario, &target.ybar, opts)?.objective;
            Ok(Some((j, (ops, target))))
        })?;
        record.backtracks = bt.backtracks;
        record.j_trial = bt.j_trial;
        if let Some((ops, target)) = bt.accepted {
            record.step = bt.step;
            record.accepted = true;
            next = Some(MeshState::from_parts(ops, target, cfg.mu_min, cfg.mu_max, opts)?);
        }
    } else {
        let mut t = base;
        let mut trial = mesh.deform(&def.field, t)?;
        if cfg.guard {
            let mut halvings = 0;
            while !trial.is_valid() && halvings < GUARD_HALVINGS {
                t *= 0.5;
                halvings += 1;
                trial = mesh.deform(&def.field, t)?;
            }
            record.backtracks = halvings;
            if !trial.is_valid() {
                return Err(Error::MeshInvalidated {
                    iteration: n,
                    reason: format!("guard exhausted after {GUARD_HALVINGS} halvings"),
                });
            }
        }
        record.step = t;
        if trial.is_valid() {
            record.accepted = true;
            next = Some(MeshState::new(&trial, &cfg.target, cfg.mu_min, cfg.mu_max, opts)?);
        } else {
            invalid_mesh = Some(trial);
        }
    }

    record.min_quality = match (&next, &invalid_mesh) {
        (Some(s), _) => triangle_quality(s.mesh()).min_quality(),
        (None, Some(bad)) => triangle_quality(bad).min_quality(),
        (None, None) => triangle_quality(mesh).min_quality(),
    };
    observer(&IterationSnapshot { record: &record, state, evaluation: &ev, deformation: &def })?;
    Ok(StepOutcome { next, record, invalid_mesh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, Inclusion};
    use crate::shape_calculus::generate_target;

    fn setup(target_incl: Inclusion) -> (TriMesh, Arc<TargetMeasurement>) {
        let opts = SolverOptions::default();
        let s = Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0).unwrap();
        let mesh = generate_mesh(14, &[Inclusion::circle(0.5, 0.5, 0.2)]).unwrap();
        let tmesh = generate_mesh(14, &[target_incl]).unwrap();
        (mesh, Arc::new(generate_target(&tmesh, &s, &opts).unwrap()))
    }

    #[test]
    fn optimum_stays_put() {
        let (mesh, target) = setup(Inclusion::circle(0.5, 0.5, 0.2));
        let dist = ScenarioDistribution::deterministic(1.5, 4.0, 10.0, 0.0);
        let cfg = RunConfig::new(mesh.clone(), target, dist, StepRule::armijo(50.0, 0.5, 1e-4), 2);
        let r = run_optimization(&cfg).unwrap();
        assert!(r.abort.is_none());
        assert!(r.history[0].grad_norm_sq <= 1e-16, "{}", r.history[0].grad_norm_sq);
        let moved = r
            .final_mesh
            .vertices()
            .iter()
            .zip(mesh.vertices())
            .fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs()));
        assert!(moved < 1e-8);
    }

    #[test]
    fn deterministic_descent_is_monotone() {
        let (mesh, target) = setup(Inclusion::circle(0.55, 0.45, 0.22));
        let dist = ScenarioDistribution::deterministic(1.5, 4.0, 10.0, 0.0);
        let cfg = RunConfig::new(mesh, target, dist, StepRule::armijo(50.0, 0.5, 1e-4), 8);
        let r = run_optimization(&cfg).unwrap();
        assert!(r.abort.is_none(), "{:?}", r.abort);
        let js: Vec<f64> = r.history.iter().filter(|h| h.accepted).map(|h| h.j_sample).collect();
        assert!(js.len() >= 2);
        assert!(js.windows(2).all(|w| w[1] <= w[0]), "{js:?}");
        for h in r.history.iter().filter(|h| h.accepted) {
            assert!(h.j_trial.unwrap() <= h.j_sample - h.step * 1e-4 * h.grad_norm_sq);
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let (mesh, target) = setup(Inclusion::circle(0.5, 0.5, 0.2));
        let dist = ScenarioDistribution::deterministic(1.5, 4.0, 10.0, 0.0);
        let cfg = RunConfig::new(mesh, target, dist, StepRule::armijo(50.0, 0.5, 1e-4), 0);
        assert!(run_optimization(&cfg).is_err());
    }
}
