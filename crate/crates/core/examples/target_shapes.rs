//! Deforms a circle towards a rotated ellipse with deterministic data, then
//! generates targets for a few shapes and reports how far each is from the
//! circle's measurement.
//!
//! cargo run --release --example target_shapes -- [iterations]

use std::sync::Arc;

use stochastic_shape::cli::presets;
use stochastic_shape::fem::SolverOptions;
use stochastic_shape::mesh::{generate_mesh, Inclusion};
use stochastic_shape::optimizer::{run_optimization, RunConfig, StepRule};
use stochastic_shape::shape_calculus::{generate_target, objective_value, transfer_target};
use stochastic_shape::stochastics::{Scenario, ScenarioDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iterations: usize = std::env::args().nth(1).map_or(Ok(40), |s| s.parse())?;
    let opts = SolverOptions::default();
    let s = Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0)?;
    let initial = generate_mesh(39, &[presets::single_circle()])?;
    let y0 = stochastic_shape::shape_calculus::solve_state(&initial, &s, &opts)?.y;

    let shapes = [
        ("shifted circle", Inclusion::circle(0.45, 0.55, 0.2)),
        ("large circle", Inclusion::circle(0.5, 0.5, 0.25)),
        ("flat ellipse", Inclusion::ellipse(0.5, 0.5, 0.3, 0.12, 0.0)),
        ("rotated ellipse", presets::single_ellipse()),
    ];
    for (name, shape) in &shapes {
        let target = generate_target(&generate_mesh(47, &[*shape])?, &s, &opts)?;
        let j = objective_value(&initial, &y0, &transfer_target(&target, &initial));
        println!("{name:>16}: J on the initial circle {j:.4e}");
    }

    let target = Arc::new(generate_target(&generate_mesh(47, &[presets::single_ellipse()])?, &s, &opts)?);
    let dist = ScenarioDistribution::deterministic(1.5, 4.0, 10.0, 0.0);
    let cfg = RunConfig::new(initial, target, dist, StepRule::armijo(400.0, 0.5, 1e-4), iterations);
    let r = run_optimization(&cfg)?;
    for h in r.history.iter().step_by((iterations / 10).max(1)) {
        println!("iter {:>4}: J {:.4e}, |V| {:.3e}, step {:.2}", h.n, h.j_sample, h.v_l2, h.step);
    }
    if let Some(e) = r.abort {
        println!("stopped early: {e}");
    }
    Ok(())
}
