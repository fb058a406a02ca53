//! Compares the Robbins-Monro, Armijo and damped Armijo step rules on the
//! same high-variance problem.
//!
//! cargo run --release --example step_rules -- [iterations] [samples]

use std::sync::Arc;

use stochastic_shape::cli::presets;
use stochastic_shape::fem::SolverOptions;
use stochastic_shape::mesh::{generate_mesh, triangle_quality};
use stochastic_shape::optimizer::{propose_step, run_optimization, RunConfig, StepRule};
use stochastic_shape::shape_calculus::generate_target;
use stochastic_shape::stochastics::{Scenario, ScenarioDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(Ok(60), |s| s.parse())?;
    let samples: usize = args.next().map_or(Ok(50), |s| s.parse())?;
    let opts = SolverOptions::default();
    let target = Arc::new(generate_target(
        &generate_mesh(47, &[presets::single_ellipse()])?,
        &Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0)?,
        &opts,
    )?);
    let initial = generate_mesh(39, &[presets::single_circle()])?;

    let rules = [
        ("robbins-monro", StepRule::robbins_monro(800.0)),
        ("armijo", StepRule::armijo(300.0, 0.5, 1e-4)),
        ("damped armijo", StepRule::damped_armijo(400.0, 0.5, 1e-4)),
    ];
    for (name, rule) in rules {
        println!("{name}: proposed steps {:.2} (n=1), {:.2} (n={iterations})", propose_step(&rule, 1), propose_step(&rule, iterations));
        let mut cfg = RunConfig::new(initial.clone(), target.clone(), ScenarioDistribution::truncated(0.2)?, rule, iterations);
        cfg.seed = 6;
        cfg.estimate_m = samples;
        let r = run_optimization(&cfg)?;
        let tail = &r.history[r.history.len().saturating_sub(10)..];
        let mean_step = tail.iter().map(|h| h.step).sum::<f64>() / tail.len().max(1) as f64;
        let max_j = tail.iter().map(|h| h.j_sample).fold(f64::NEG_INFINITY, f64::max);
        let backtracks: usize = r.history.iter().map(|h| h.backtracks).sum();
        println!("  {} iterations, {backtracks} backtracks, last 10: mean step {mean_step:.2}, max J {max_j:.3e}", r.history.len());
        if let (Some(a), Some(b)) = (&r.initial_estimate, &r.final_estimate) {
            println!("  j_hat {:.4e} -> {:.4e}, v_hat {:.3e} -> {:.3e}", a.j_hat, b.j_hat, a.v_hat, b.v_hat);
        }
        println!("  final max aspect ratio {:.3}", triangle_quality(&r.final_mesh).max);
        if let Some(e) = r.abort {
            println!("  stopped early: {e}");
        }
    }
    Ok(())
}
