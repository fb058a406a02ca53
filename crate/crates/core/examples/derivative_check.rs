//! Compares the assembled shape derivative with one-sided finite differences
//! of the objective along random interface perturbations.
//!
//! cargo run --release --example derivative_check -- [directions]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochastic_shape::fem::{SolverOptions, VectorField};
use stochastic_shape::mesh::{generate_mesh, Inclusion, TriMesh};
use stochastic_shape::shape_calculus::{
    evaluate, generate_target, transfer_target_with_gradient, PdeOperators, TargetGradient,
};
use stochastic_shape::stochastics::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let directions: usize = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let opts = SolverOptions { tol: 1e-13, max_iter: None };
    let s = Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0)?;
    let mesh = generate_mesh(39, &[Inclusion::circle(0.5, 0.5, 0.2)])?;
    let target = generate_target(&generate_mesh(47, &[Inclusion::ellipse(0.52, 0.47, 0.24, 0.17, 0.3)])?, &s, &opts)?;

    let objective = |m: &TriMesh| -> f64 {
        let tr = transfer_target_with_gradient(&target, m);
        PdeOperators::new(m).and_then(|ops| ops.solve(&s, &tr.ybar, &opts)).map(|p| p.objective).unwrap_or(f64::NAN)
    };
    let ops = PdeOperators::new(&mesh)?;
    let tr = transfer_target_with_gradient(&target, &mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for mode in [TargetGradient::Transfer, TargetGradient::Interpolant] {
        let ev = evaluate(&ops, &tr, &s, mode, &opts)?;
        let j0 = ev.pde.objective;
        println!("{mode:?}: J = {j0:.6e}, multiplier = {:.4}", ev.pde.multiplier);
        for _ in 0..directions {
            let v = VectorField::new(
                (0..mesh.n_vertices())
                    .map(|i| if mesh.is_interface_vertex(i) { [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)] } else { [0.0; 2] })
                    .collect(),
            );
            let d = ev.derivative.apply(&v);
            print!("  dJ[V] = {d:+.6e}, relative error at eps");
            for eps in [1e-3, 1e-4, 1e-5] {
                // `deform` maps x to x - tV, so t = -eps moves along V.
                let fd = (objective(&mesh.deform(&v, -eps)?) - j0) / eps;
                print!(" {eps:.0e}: {:.2e}", ((fd - d) / d).abs());
            }
            println!();
        }
    }
    Ok(())
}
