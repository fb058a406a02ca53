//! Makes one data component random at a time and compares the spread of the
//! objective and the progress of the optimization.
//!
//! cargo run --release --example individual_variables -- [iterations] [samples] [std]

use std::sync::Arc;

use stochastic_shape::cli::presets;
use stochastic_shape::fem::SolverOptions;
use stochastic_shape::mesh::generate_mesh;
use stochastic_shape::optimizer::{run_optimization, RunConfig, StepRule};
use stochastic_shape::shape_calculus::generate_target;
use stochastic_shape::stochastics::{Component, Scenario, ScenarioDistribution, TruncNormalParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(Ok(40), |s| s.parse())?;
    let samples: usize = args.next().map_or(Ok(50), |s| s.parse())?;
    let std: f64 = args.next().map_or(Ok(0.2), |s| s.parse())?;
    let opts = SolverOptions::default();
    let target = Arc::new(generate_target(
        &generate_mesh(47, &[presets::single_ellipse()])?,
        &Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0)?,
        &opts,
    )?);
    let initial = generate_mesh(39, &[presets::single_circle()])?;

    let random = ScenarioDistribution::truncated(std)?;
    let fixed = ScenarioDistribution::deterministic(1.5, 4.0, 10.0, 0.0);
    let cases = [
        ("deterministic", fixed.clone()),
        ("kappa0", ScenarioDistribution { kappa0: random.kappa0, ..fixed.clone() }),
        ("kappa_int", ScenarioDistribution { kappa_int: random.kappa_int, ..fixed.clone() }),
        ("g", ScenarioDistribution { g: random.g, ..fixed.clone() }),
        // A constant source is absorbed by the mean-value multiplier, so this
        // row matches the deterministic one.
        ("f", ScenarioDistribution { f: Component::TruncNormal(TruncNormalParams::new(0.0, std, -1.0, 1.0)?), ..fixed.clone() }),
        ("all", random),
    ];

    println!("{:>14} {:>12} {:>12} {:>12} {:>12}", "random", "j_hat start", "j_hat end", "min J end", "max J end");
    for (name, dist) in cases {
        let mut cfg = RunConfig::new(initial.clone(), target.clone(), dist, StepRule::armijo(300.0, 0.5, 1e-4), iterations);
        cfg.seed = 11;
        cfg.estimate_m = samples;
        let r = run_optimization(&cfg)?;
        let (Some(e0), Some(e1)) = (&r.initial_estimate, &r.final_estimate) else {
            println!("{name:>14}: stopped early: {}", r.abort.map_or(String::new(), |e| e.to_string()));
            continue;
        };
        let js = e1.samples.iter().map(|s| s.0);
        let lo = js.clone().fold(f64::INFINITY, f64::min);
        let hi = js.fold(f64::NEG_INFINITY, f64::max);
        println!("{name:>14} {:>12.4e} {:>12.4e} {lo:>12.4e} {hi:>12.4e}", e0.j_hat, e1.j_hat);
    }
    Ok(())
}
