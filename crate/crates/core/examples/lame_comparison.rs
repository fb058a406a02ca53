//! Runs the same optimization with two pairs of Lamé bounds and compares the
//! quality of the resulting meshes.
//!
//! cargo run --release --example lame_comparison -- [iterations]

use std::sync::Arc;

use stochastic_shape::cli::presets;
use stochastic_shape::fem::SolverOptions;
use stochastic_shape::mesh::{generate_mesh, triangle_quality};
use stochastic_shape::optimizer::{run_optimization, RunConfig, StepRule};
use stochastic_shape::shape_calculus::generate_target;
use stochastic_shape::stochastics::{Scenario, ScenarioDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iterations: usize = std::env::args().nth(1).map_or(Ok(50), |s| s.parse())?;
    let opts = SolverOptions::default();
    let target = Arc::new(generate_target(
        &generate_mesh(47, &[presets::single_circle()])?,
        &Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0)?,
        &opts,
    )?);
    let initial = generate_mesh(39, &[presets::single_ellipse()])?;
    println!("initial max aspect ratio {:.3}", triangle_quality(&initial).max);

    for (mu_min, mu_max) in [(0.5, 1.0), (10.0, 25.0)] {
        let mut cfg = RunConfig::new(initial.clone(), target.clone(), ScenarioDistribution::truncated(0.01)?, StepRule::armijo(400.0, 0.5, 1e-4), iterations);
        cfg.seed = 5;
        cfg.mu_min = mu_min;
        cfg.mu_max = mu_max;
        let r = run_optimization(&cfg)?;
        let q = triangle_quality(&r.final_mesh);
        let last = r.history.last().map_or(f64::NAN, |h| h.j_sample);
        println!(
            "mu in [{mu_min}, {mu_max}]: {} iterations, last J {last:.3e}, aspect ratio mean {:.3} max {:.3}, inverted {}",
            r.history.len(),
            q.mean,
            q.max,
            q.inverted
        );
        if let Some(e) = r.abort {
            println!("  stopped early: {e}");
        }
    }
    Ok(())
}
