//! Recovers six inclusions of different shapes from six small circles under
//! random conductivities and boundary flux.
//!
//! cargo run --release --example multiple_shapes -- [iterations] [samples]

use std::sync::Arc;

use stochastic_shape::cli::presets;
use stochastic_shape::fem::SolverOptions;
use stochastic_shape::mesh::{generate_mesh, triangle_quality};
use stochastic_shape::optimizer::{run_optimization, RunConfig, StepRule};
use stochastic_shape::shape_calculus::generate_target;
use stochastic_shape::stochastics::{Scenario, ScenarioDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(Ok(60), |s| s.parse())?;
    let samples: usize = args.next().map_or(Ok(20), |s| s.parse())?;
    let opts = SolverOptions::default();

    let target_mesh = generate_mesh(47, &presets::six_inclusion_target())?;
    let target = generate_target(&target_mesh, &Scenario::two_phase(1.5, 4.0, 6, 10.0, 0.0)?, &opts)?;
    let initial = generate_mesh(39, &presets::six_inclusion_initial())?;

    let mut cfg = RunConfig::new(initial, Arc::new(target), ScenarioDistribution::truncated(0.01)?, StepRule::armijo(50.0, 0.5, 1e-4), iterations);
    cfg.seed = 4;
    cfg.estimate_m = samples;
    cfg.estimate_every = (iterations / 4).max(1);
    let r = run_optimization(&cfg)?;

    println!("{:>5} {:>10} {:>12} {:>12} {:>4}", "iter", "step", "J", "j_hat", "bt");
    for h in &r.history {
        if let Some(j) = h.j_hat {
            println!("{:>5} {:>10.3} {:>12.4e} {:>12.4e} {:>4}", h.n, h.step, h.j_sample, j, h.backtracks);
        }
    }
    let j0 = r.initial_estimate.as_ref().map(|e| e.j_hat);
    let j1 = r.final_estimate.as_ref().map(|e| e.j_hat);
    if let (Some(a), Some(b)) = (j0, j1) {
        println!("j_hat {a:.4e} -> {b:.4e} (ratio {:.3})", b / a);
    }
    let q = triangle_quality(&r.final_mesh);
    println!("final max aspect ratio {:.3}, interface loops {}", q.max, r.final_mesh.interface_loops().len());
    if let Some(e) = r.abort {
        println!("stopped early: {e}");
    }
    Ok(())
}
