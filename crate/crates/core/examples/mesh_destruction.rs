//! Takes oversized Robbins-Monro steps with and without the mesh guard. Without
//! it the run stops at the first step that inverts a triangle.
//!
//! cargo run --release --example mesh_destruction -- [alpha] [iterations]

use std::sync::Arc;

use stochastic_shape::cli::presets;
use stochastic_shape::fem::SolverOptions;
use stochastic_shape::mesh::{generate_mesh, triangle_quality};
use stochastic_shape::optimizer::{run_optimization, RunConfig, StepRule};
use stochastic_shape::shape_calculus::generate_target;
use stochastic_shape::stochastics::{Scenario, ScenarioDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().map_or(Ok(2000.0), |s| s.parse())?;
    let iterations: usize = args.next().map_or(Ok(5), |s| s.parse())?;
    let opts = SolverOptions::default();
    let target = Arc::new(generate_target(
        &generate_mesh(47, &[presets::single_ellipse()])?,
        &Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0)?,
        &opts,
    )?);
    let initial = generate_mesh(39, &[presets::single_circle()])?;

    for guard in [false, true] {
        let mut cfg = RunConfig::new(initial.clone(), target.clone(), ScenarioDistribution::truncated(0.2)?, StepRule::robbins_monro(alpha), iterations);
        cfg.seed = 8;
        cfg.guard = guard;
        let r = run_optimization(&cfg)?;
        println!("guard {}:", if guard { "on" } else { "off" });
        for h in &r.history {
            println!("  iter {}: step {:.2}, halvings {}, min quality {:.4}", h.n, h.step, h.backtracks, h.min_quality);
        }
        if let Some(bad) = &r.invalid_mesh {
            let q = triangle_quality(bad);
            println!("  invalid mesh: {} inverted triangles", q.inverted);
        }
        if let Some(e) = r.abort {
            println!("  stopped: {e}");
        }
    }
    Ok(())
}
