//! Property checks shared by the proptest suites and the acceptance run.
//! Each check returns `Err` with a description of the first violation.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochastic_shape::cli::output::{history_csv, vtk, PointData};
use stochastic_shape::deformation::{assemble_elasticity, solve_deformation, solve_mu_field};
use stochastic_shape::fem::{
    assemble_load, assemble_mass, assemble_stiffness, l2_norm, nodal_weights, solve_zero_mean, Coefficient,
    NodalField, SolverOptions, Source, SparseSystem, VectorField,
};
use stochastic_shape::mesh::{
    aspect_ratio, generate_mesh, locate_point, parse_mesh, triangle_quality, write_mesh, Inclusion, Point,
    PointLocator, TriMesh,
};
use stochastic_shape::optimizer::{
    estimate_expectation, propose_step, run_optimization, MeshState, RunConfig, StepRule,
};
use stochastic_shape::shape_calculus::{
    evaluate, generate_target, transfer_target_with_gradient, PdeOperators, TargetGradient, TargetMeasurement,
};
use stochastic_shape::stochastics::{
    sample_truncated_normal, stream, Scenario, ScenarioDistribution, StreamKey, TruncNormalParams,
};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generated mesh with one or two inclusions whose interior vertices are
/// jittered by up to `jitter` cell widths.
pub fn random_mesh(seed: u64, resolution: usize, two: bool, jitter: f64) -> TriMesh {
    let mut r = rng(seed);
    let incl = if two {
        vec![
            Inclusion::circle(0.3 + r.random_range(-0.03..0.03), 0.5, r.random_range(0.08..0.12)),
            Inclusion::ellipse(0.72, 0.5 + r.random_range(-0.05..0.05), 0.1, r.random_range(0.06..0.1), r.random_range(0.0..3.0)),
        ]
    } else {
        vec![Inclusion::circle(r.random_range(0.4..0.6), r.random_range(0.4..0.6), r.random_range(0.12..0.2))]
    };
    let mesh = generate_mesh(resolution, &incl).expect("layout fits");
    let h = jitter / resolution as f64;
    let verts = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, &p)| {
            if mesh.is_boundary_vertex(v) || h == 0.0 {
                p
            } else {
                [p[0] + r.random_range(-h..h), p[1] + r.random_range(-h..h)]
            }
        })
        .collect();
    let jittered = mesh.with_vertices(verts);
    if jittered.is_valid() {
        jittered
    } else {
        mesh
    }
}

fn random_vector_field(r: &mut ChaCha8Rng, n: usize) -> VectorField {
    VectorField::new((0..n).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect())
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-12, max_iter: None }
}

// ---- mesh ----

pub fn area_sums_to_one(mesh: &TriMesh) -> Check {
    let total: f64 = (0..mesh.n_triangles()).map(|t| mesh.signed_area(t)).sum();
    ensure!((total - 1.0).abs() <= 1e-12, "total area {total}");
    Ok(())
}

pub fn deform_round_trip(mesh: &TriMesh, seed: u64) -> Check {
    let mut r = rng(seed);
    let v = random_vector_field(&mut r, mesh.n_vertices());
    let t = r.random_range(-0.02..0.02) / mesh.n_triangles().max(1) as f64;
    let back = mesh.deform(&v, t).and_then(|m| m.deform(&v, -t)).map_err(|e| e.to_string())?;
    for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
        ensure!((a[0] - b[0]).abs() <= 1e-15 && (a[1] - b[1]).abs() <= 1e-15, "{a:?} came back as {b:?}");
    }
    Ok(())
}

pub fn interface_invariant_under_deform(mesh: &TriMesh, seed: u64) -> Check {
    let mut r = rng(seed);
    let v = random_vector_field(&mut r, mesh.n_vertices());
    let moved = mesh.deform(&v, 1e-3).map_err(|e| e.to_string())?;
    ensure!(moved.interface_edges() == mesh.interface_edges(), "interface edges changed");
    ensure!(moved.interface_loops() == mesh.interface_loops(), "interface loops changed");
    Ok(())
}

fn bary(c: [Point; 3], x: Point) -> [f64; 3] {
    // ratios of sub-triangle areas
    let area = |a: Point, b: Point, c: Point| 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    let total = area(c[0], c[1], c[2]);
    [area(x, c[1], c[2]) / total, area(c[0], x, c[2]) / total, area(c[0], c[1], x) / total]
}

pub fn locate_matches_scan(mesh: &TriMesh, seed: u64, points: usize) -> Check {
    let mut r = rng(seed);
    let locator = PointLocator::new(mesh).map_err(|e| e.to_string())?;
    for _ in 0..points {
        let x = [r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        let containing: Vec<usize> = (0..mesh.n_triangles())
            .filter(|&t| bary(mesh.corners(t), x).iter().all(|&l| l >= -1e-12))
            .collect();
        ensure!(!containing.is_empty(), "scan found no triangle for {x:?}");
        for loc in [locator.locate(x), locate_point(mesh, x).map_err(|e| e.to_string())?] {
            ensure!(containing.contains(&loc.triangle), "{x:?} located in {} not in {containing:?}", loc.triangle);
            let b = bary(mesh.corners(loc.triangle), x);
            for k in 0..3 {
                ensure!((b[k] - loc.bary[k]).abs() <= 1e-10, "barycentric mismatch {b:?} vs {:?}", loc.bary);
            }
        }
    }
    Ok(())
}

/// Circumradius `abc / 4A` over twice the inradius `A / s`, with the area
/// from Heron's formula.
pub fn independent_ratio(a: Point, b: Point, c: Point) -> f64 {
    let d = |p: Point, q: Point| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let (la, lb, lc) = (d(b, c), d(a, c), d(a, b));
    let s = (la + lb + lc) / 2.0;
    let area = (s * (s - la) * (s - lb) * (s - lc)).sqrt();
    let circum = la * lb * lc / (4.0 * area);
    let inr = area / s;
    circum / (2.0 * inr)
}

pub fn quality_matches_independent(seed: u64, triangles: usize) -> Check {
    let mut r = rng(seed);
    let mut checked = 0;
    while checked < triangles {
        let p: [Point; 3] = std::array::from_fn(|_| [r.random_range(0.0..1.0), r.random_range(0.0..1.0)]);
        let signed = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        // keep away from slivers where Heron's formula loses digits
        if signed.abs() < 0.02 {
            continue;
        }
        let (a, b, c) = if signed > 0.0 { (p[0], p[1], p[2]) } else { (p[0], p[2], p[1]) };
        let ours = aspect_ratio(a, b, c).ok_or("positive triangle rejected")?;
        let theirs = independent_ratio(a, b, c);
        ensure!(((ours - theirs) / theirs).abs() <= 1e-12, "ratio {ours} vs {theirs}");
        ensure!(aspect_ratio(a, c, b).is_none(), "clockwise triangle accepted");
        checked += 1;
    }
    Ok(())
}

pub fn mesh_round_trip(mesh: &TriMesh) -> Check {
    let back = parse_mesh(&write_mesh(mesh)).map_err(|e| e.to_string())?;
    ensure!(back.triangles() == mesh.triangles(), "triangles differ");
    ensure!(back.boundary_edges() == mesh.boundary_edges(), "boundary edges differ");
    for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
        ensure!(a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits(), "{a:?} vs {b:?}");
    }
    Ok(())
}

// ---- stochastics ----

pub fn streams_reproducible(seed: u64) -> Check {
    for key in [StreamKey::step(3), StreamKey::estimate(3, 17), StreamKey::estimate(0, 0)] {
        let a: Vec<u64> = (0..64).map({
            let mut s = stream(seed, key);
            move |_| s.random()
        }).collect();
        let b: Vec<u64> = (0..64).map({
            let mut s = stream(seed, key);
            move |_| s.random()
        }).collect();
        ensure!(a == b, "stream {key:?} not reproducible");
    }
    let mut a = stream(seed, StreamKey::step(1));
    let mut b = stream(seed, StreamKey::step(2));
    ensure!(a.random::<u64>() != b.random::<u64>(), "distinct keys share a stream");
    Ok(())
}

/// The estimator gives bit-identical output on one thread and on four.
pub fn estimator_thread_independent(seed: u64) -> Check {
    let mesh = generate_mesh(12, &[Inclusion::circle(0.5, 0.5, 0.2)]).unwrap();
    let tmesh = generate_mesh(12, &[Inclusion::circle(0.52, 0.48, 0.22)]).unwrap();
    let s = Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0).unwrap();
    let target = generate_target(&tmesh, &s, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    let state = MeshState::new(&mesh, &target, 10.0, 25.0, &opts).map_err(|e| e.to_string())?;
    let dist = ScenarioDistribution::truncated(0.2).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate_expectation(&state, &dist, seed, 4, 12, TargetGradient::Transfer, &opts))
    };
    let (a, b) = (run(1).map_err(|e| e.to_string())?, run(4).map_err(|e| e.to_string())?);
    ensure!(a.j_hat.to_bits() == b.j_hat.to_bits() && a.v_hat.to_bits() == b.v_hat.to_bits(), "estimates differ");
    ensure!(a.samples == b.samples, "samples differ");
    Ok(())
}

fn scenario_draws(seed: u64, n: usize, std: f64) -> Result<Vec<Scenario>, String> {
    let dist = ScenarioDistribution::truncated(std).map_err(|e| e.to_string())?;
    (0..n)
        .map(|l| dist.sample(1, &mut stream(seed, StreamKey::estimate(0, l))).map_err(|e| e.to_string()))
        .collect()
}

pub fn kappa_g_uncorrelated(seed: u64, n: usize) -> Check {
    let draws = scenario_draws(seed, n, 0.2)?;
    let k: Vec<f64> = draws.iter().map(|s| s.kappa[0]).collect();
    let g: Vec<f64> = draws.iter().map(|s| s.g).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mk, mg) = (mean(&k), mean(&g));
    let cov: f64 = k.iter().zip(&g).map(|(a, b)| (a - mk) * (b - mg)).sum();
    let vk: f64 = k.iter().map(|a| (a - mk).powi(2)).sum();
    let vg: f64 = g.iter().map(|b| (b - mg).powi(2)).sum();
    let corr = cov / (vk * vg).sqrt();
    ensure!(corr.abs() <= 0.01, "correlation {corr}");
    Ok(())
}

/// Analytic CDF of the truncated normal through the error function.
pub fn truncated_cdf(p: &TruncNormalParams, x: f64) -> f64 {
    let phi = |z: f64| 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
    let z = |v: f64| (v - p.mean) / p.std;
    ((phi(z(x)) - phi(z(p.lo))) / (phi(z(p.hi)) - phi(z(p.lo)))).clamp(0.0, 1.0)
}

pub fn truncated_normal_ks(seed: u64, params: TruncNormalParams, n: usize) -> Check {
    let mut s = stream(seed, StreamKey::step(0));
    let mut x: Vec<f64> = (0..n)
        .map(|_| sample_truncated_normal(&params, &mut s).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure!(x.iter().all(|v| (params.lo..=params.hi).contains(v)), "draw outside the window");
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = truncated_cdf(&params, v);
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max);
    ensure!(d <= 0.01, "KS statistic {d}");
    Ok(())
}

// ---- fem ----

fn kappas(seed: u64, mesh: &TriMesh) -> Vec<f64> {
    let mut r = rng(seed);
    (0..=mesh.max_label()).map(|_| r.random_range(0.5..5.0)).collect()
}

pub fn stiffness_symmetric(mesh: &TriMesh, seed: u64) -> Check {
    let k = assemble_stiffness(mesh, Coefficient::PerRegion(&kappas(seed, mesh))).map_err(|e| e.to_string())?;
    let d = k.to_dense();
    let n = d.len();
    let max = d.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| m.max((d[i][j] - d[j][i]).abs()));
    ensure!(asym <= 1e-14 * max, "asymmetry {asym} vs max {max}");
    Ok(())
}

pub fn stiffness_psd(mesh: &TriMesh, seed: u64, trials: usize) -> Check {
    let k = assemble_stiffness(mesh, Coefficient::PerRegion(&kappas(seed, mesh))).map_err(|e| e.to_string())?;
    let mut r = rng(seed ^ 0x5eed);
    for _ in 0..trials {
        let v = random_vec(&mut r, mesh.n_vertices());
        let q = dot(&v, &k.mul(&v));
        ensure!(q >= -1e-12, "v^T K v = {q}");
        ensure!(q > 1e-10, "non-constant vector in the kernel: {q}");
    }
    let ones = vec![1.0; mesh.n_vertices()];
    let q = dot(&ones, &k.mul(&ones));
    ensure!(q.abs() <= 1e-12, "constants not in the kernel: {q}");
    Ok(())
}

fn zero_mean_solve(mesh: &TriMesh, seed: u64) -> Result<(SparseSystem, Vec<f64>, Vec<f64>, f64), String> {
    let mut r = rng(seed);
    let k = assemble_stiffness(mesh, Coefficient::PerRegion(&kappas(seed, mesh))).map_err(|e| e.to_string())?;
    let f = r.random_range(-2.0..2.0);
    let g = r.random_range(-10.0..10.0);
    let rhs = assemble_load(mesh, Source::Constant(f), g).map_err(|e| e.to_string())?;
    let sys = SparseSystem::zero_mean(k, nodal_weights(mesh));
    let sol = solve_zero_mean(&sys, &rhs, &SolverOptions::default()).map_err(|e| e.to_string())?;
    Ok((sys, rhs, sol.field.into_values(), sol.multiplier))
}

pub fn galerkin_residual(mesh: &TriMesh, seed: u64) -> Check {
    let (sys, rhs, y, lambda) = zero_mean_solve(mesh, seed)?;
    let w = nodal_weights(mesh);
    let ky = sys.matrix.mul(&y);
    let res: Vec<f64> = (0..y.len()).map(|i| ky[i] - rhs[i] + lambda * w[i]).collect();
    // every hat function as test vector
    let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(worst <= 1e-10 * norm(&rhs).max(f64::MIN_POSITIVE), "residual {worst} vs |rhs| {}", norm(&rhs));
    let mut r = rng(seed ^ 7);
    for _ in 0..10 {
        let p = random_vec(&mut r, y.len());
        let v = dot(&p, &res);
        ensure!(v.abs() <= 1e-10 * norm(&rhs) * norm(&p), "p^T residual {v}");
    }
    Ok(())
}

pub fn mean_constraint(mesh: &TriMesh, seed: u64) -> Check {
    let (_, _, y, _) = zero_mean_solve(mesh, seed)?;
    let m = dot(&nodal_weights(mesh), &y);
    ensure!(m.abs() <= 1e-12 * norm(&y), "w.y = {m}, |y| = {}", norm(&y));
    Ok(())
}

/// Seven-point degree-5 rule on the reference triangle: (weight, l1, l2).
const DUNAVANT5: [(f64, f64, f64); 7] = {
    const A1: f64 = 0.059715871789770;
    const B1: f64 = 0.470142064105115;
    const A2: f64 = 0.797426985353087;
    const B2: f64 = 0.101286507323456;
    const W1: f64 = 0.132394152788506;
    const W2: f64 = 0.125939180544827;
    [
        (0.225, 1.0 / 3.0, 1.0 / 3.0),
        (W1, A1, B1),
        (W1, B1, A1),
        (W1, B1, B1),
        (W2, A2, B2),
        (W2, B2, A2),
        (W2, B2, B2),
    ]
};

/// `|y_h - y*|_L2` with the Neumann manufactured solution
/// `y* = cos(pi x) cos(pi y)`, `kappa = 1`, `g = 0`.
pub fn manufactured_error(resolution: usize) -> Result<f64, String> {
    use std::f64::consts::PI;
    let exact = |p: Point| (PI * p[0]).cos() * (PI * p[1]).cos();
    let mesh = generate_mesh(resolution, &[]).map_err(|e| e.to_string())?;
    let f = NodalField::from_fn(&mesh, |p| 2.0 * PI * PI * exact(p));
    let rhs = assemble_load(&mesh, Source::Nodal(&f), 0.0).map_err(|e| e.to_string())?;
    let k = assemble_stiffness(&mesh, Coefficient::Constant(1.0)).map_err(|e| e.to_string())?;
    let sol = solve_zero_mean(&SparseSystem::zero_mean(k, nodal_weights(&mesh)), &rhs, &tight()).map_err(|e| e.to_string())?;
    let y = sol.field.values();
    let mut err2 = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = mesh.corners(t);
        let area = mesh.signed_area(t);
        for &(w, l1, l2) in &DUNAVANT5 {
            let l0 = 1.0 - l1 - l2;
            let x = [l0 * c[0][0] + l1 * c[1][0] + l2 * c[2][0], l0 * c[0][1] + l1 * c[1][1] + l2 * c[2][1]];
            let yh = l0 * y[tri.vertices[0]] + l1 * y[tri.vertices[1]] + l2 * y[tri.vertices[2]];
            err2 += w * area * (yh - exact(x)).powi(2);
        }
    }
    Ok(err2.sqrt())
}

pub fn manufactured_ratio(coarse: usize) -> Result<f64, String> {
    Ok(manufactured_error(coarse)? / manufactured_error(2 * coarse)?)
}

// ---- shape calculus ----

fn derivative_setup(mesh: &TriMesh, seed: u64) -> Result<stochastic_shape::shape_calculus::Evaluation, String> {
    let mut r = rng(seed);
    let n = mesh.max_label() as usize;
    let s = Scenario::two_phase(r.random_range(1.0..2.0), r.random_range(3.0..5.0), n, r.random_range(9.0..11.0), 0.0)
        .map_err(|e| e.to_string())?;
    let shifted: Vec<Inclusion> = if n == 1 {
        vec![Inclusion::circle(0.53, 0.47, 0.2)]
    } else {
        vec![Inclusion::circle(0.3, 0.48, 0.12), Inclusion::ellipse(0.72, 0.5, 0.13, 0.1, 0.4)]
    };
    let tmesh = generate_mesh(20, &shifted).map_err(|e| e.to_string())?;
    let target = generate_target(&tmesh, &s, &tight()).map_err(|e| e.to_string())?;
    let ops = PdeOperators::new(mesh).map_err(|e| e.to_string())?;
    evaluate(&ops, &transfer_target_with_gradient(&target, mesh), &s, TargetGradient::Transfer, &tight()).map_err(|e| e.to_string())
}

pub fn derivative_linear(mesh: &TriMesh, seed: u64) -> Check {
    let ev = derivative_setup(mesh, seed)?;
    let mut r = rng(seed ^ 11);
    let (u, w) = (random_vector_field(&mut r, mesh.n_vertices()), random_vector_field(&mut r, mesh.n_vertices()));
    let d = &ev.derivative;
    for alpha in [0.5, 2.0, -4.0, 0.125] {
        // powers of two scale without rounding
        ensure!(d.apply(&u.scale(alpha)).to_bits() == (alpha * d.apply(&u)).to_bits(), "dJ[{alpha} U] not exact");
    }
    let alpha = r.random_range(-3.0..3.0);
    let lhs = d.apply(&u.scale(alpha));
    ensure!((lhs - alpha * d.apply(&u)).abs() <= 1e-13 * lhs.abs().max(1e-300) + 1e-300, "scaling by {alpha}");
    let sum = VectorField::new(u.values().iter().zip(w.values()).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect());
    let (a, b, c) = (d.apply(&sum), d.apply(&u), d.apply(&w));
    ensure!((a - b - c).abs() <= 1e-12 * (b.abs() + c.abs()), "additivity {a} vs {b} + {c}");
    Ok(())
}

pub fn derivative_restricted(mesh: &TriMesh, seed: u64) -> Check {
    let ev = derivative_setup(mesh, seed)?;
    let active = mesh.active_vertices();
    ensure!(ev.derivative.active == active, "active set differs from the mesh rule");
    for (v, l) in ev.derivative.load.values().iter().enumerate() {
        if !active[v] {
            ensure!(l[0].to_bits() == 0 && l[1].to_bits() == 0, "inactive vertex {v} carries {l:?}");
        }
    }
    ensure!(active.iter().any(|&a| a) && active.iter().any(|&a| !a), "degenerate active set");
    Ok(())
}

/// Both triangles of every interface edge reference the same two nodal
/// values, so the traces agree bit for bit.
pub fn interface_traces_agree(mesh: &TriMesh, seed: u64) -> Check {
    let ev = derivative_setup(mesh, seed)?;
    let y = ev.pde.y.values();
    for e in mesh.interface_edges() {
        let [t0, t1] = e.triangles;
        let trace = |t: usize| -> Result<[f64; 2], String> {
            let vs = mesh.triangles()[t].vertices;
            let pick = |v: usize| vs.iter().position(|&w| w == v).map(|i| y[vs[i]]);
            Ok([pick(e.vertices[0]).ok_or("edge vertex missing")?, pick(e.vertices[1]).ok_or("edge vertex missing")?])
        };
        let (a, b) = (trace(t0)?, trace(t1)?);
        ensure!(a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits(), "jump across edge {:?}", e.vertices);
        ensure!(mesh.triangles()[t0].label != mesh.triangles()[t1].label, "interface edge inside one region");
    }
    Ok(())
}

// ---- deformation ----

pub fn elasticity_spd(mesh: &TriMesh, seed: u64, trials: usize) -> Check {
    let lame = solve_mu_field(mesh, 10.0, 25.0, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let a = assemble_elasticity(mesh, &lame).map_err(|e| e.to_string())?.matrix;
    let mut r = rng(seed);
    for _ in 0..trials {
        let mut v = random_vec(&mut r, 2 * mesh.n_vertices());
        for i in 0..mesh.n_vertices() {
            if mesh.is_boundary_vertex(i) {
                v[2 * i] = 0.0;
                v[2 * i + 1] = 0.0;
            }
        }
        let q = dot(&v, &a.mul(&v));
        ensure!(q > 0.0, "v^T A v = {q}");
    }
    Ok(())
}

pub fn elasticity_galerkin(mesh: &TriMesh, seed: u64, trials: usize) -> Check {
    let ev = derivative_setup(mesh, seed)?;
    let opts = tight();
    let lame = solve_mu_field(mesh, 10.0, 25.0, &opts).map_err(|e| e.to_string())?;
    let sys = assemble_elasticity(mesh, &lame).map_err(|e| e.to_string())?;
    let def = solve_deformation(&sys, &ev.derivative, &opts).map_err(|e| e.to_string())?;
    let load = ev.derivative.load.to_interleaved();
    let v = def.field.to_interleaved();
    for i in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(i) {
            ensure!(v[2 * i] == 0.0 && v[2 * i + 1] == 0.0, "boundary vertex {i} moves");
        }
    }
    let av = sys.matrix.mul(&v);
    let mut r = rng(seed ^ 3);
    for _ in 0..trials {
        let mut u = random_vec(&mut r, v.len());
        for i in 0..mesh.n_vertices() {
            if mesh.is_boundary_vertex(i) {
                u[2 * i] = 0.0;
                u[2 * i + 1] = 0.0;
            }
        }
        let lhs = dot(&av, &u);
        let rhs = dot(&load, &u);
        ensure!((lhs - rhs).abs() <= 1e-8 * norm(&load) * norm(&u), "a(V,U) = {lhs}, dJ[U] = {rhs}");
    }
    let energy = dot(&av, &v);
    let dual = dot(&load, &v);
    ensure!((energy - dual).abs() <= 1e-8 * dual.abs(), "a(V,V) = {energy}, dJ[V] = {dual}");
    ensure!((def.grad_norm_sq - dual).abs() <= 1e-12 * dual.abs(), "reported norm {} vs {dual}", def.grad_norm_sq);
    Ok(())
}

pub fn mu_within_bounds(mesh: &TriMesh, mu_min: f64, mu_max: f64) -> Check {
    let lame = solve_mu_field(mesh, mu_min, mu_max, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let mu = lame.mu.values();
    let lo = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ensure!(lo >= mu_min && hi <= mu_max, "mu range [{lo}, {hi}] outside [{mu_min}, {mu_max}]");
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) {
            ensure!(mu[v] == mu_min, "boundary mu {}", mu[v]);
        } else if mesh.is_interface_vertex(v) {
            ensure!(mu[v] == mu_max, "interface mu {}", mu[v]);
        }
    }
    Ok(())
}

// ---- optimizer ----

/// Decade increments of the partial sums `D_k = S(10^(k+1)) - S(10^k)`.
fn decade_increments(f: impl Fn(usize) -> f64, decades: u32) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = 0.0;
    let mut next = 10;
    let mut prev_s = None;
    for n in 1..=10usize.pow(decades) {
        s += f(n);
        if n == next {
            if let Some(p) = prev_s {
                out.push(s - p);
            }
            prev_s = Some(s);
            next *= 10;
        }
    }
    out
}

/// For `t_n = alpha n^(-e)` with `e` in `(0.5, 1]`: the decade increments
/// of `sum t_n` never shrink (divergence, compared against the integral
/// lower bound) while those of `sum t_n^2` stay below integral bounds that
/// decay geometrically with ratio `10^(1 - 2e)` (convergence).
pub fn robbins_monro_conditions(alpha: f64, exponent: f64) -> Check {
    let rule = StepRule::RobbinsMonro { alpha, exponent };
    rule.validate().map_err(|e| e.to_string())?;
    let t = |n: usize| propose_step(&rule, n);
    let lin = decade_increments(t, 6);
    for (k, d) in lin.iter().enumerate() {
        let lo = 10f64.powi(k as i32 + 1);
        // sum over (lo, 10 lo] of a decreasing function is at least the
        // integral from lo + 1 to 10 lo + 1
        let bound = if exponent == 1.0 {
            alpha * ((10.0 * lo + 1.0) / (lo + 1.0)).ln()
        } else {
            alpha * ((10.0 * lo + 1.0).powf(1.0 - exponent) - (lo + 1.0).powf(1.0 - exponent)) / (1.0 - exponent)
        };
        ensure!(*d >= bound * (1.0 - 1e-12), "decade {k}: {d} below integral bound {bound}");
        ensure!(bound >= alpha * 10f64.ln() * 0.9, "divergence bound shrinks");
    }
    let sq = decade_increments(|n| t(n) * t(n), 6);
    let q = 2.0 * exponent - 1.0;
    for (k, d) in sq.iter().enumerate() {
        let lo = 10f64.powi(k as i32 + 1);
        // sum over (lo, 10 lo] is at most the integral from lo to 10 lo,
        // and these bounds shrink by the factor 10^(-q) per decade
        let bound = alpha * alpha * (lo.powf(-q) - (10.0 * lo).powf(-q)) / q;
        ensure!(*d <= bound * (1.0 + 1e-12), "squared decade {k}: {d} above integral bound {bound}");
    }
    Ok(())
}

/// A short single-inclusion run on a resolution-14 mesh.
pub fn small_run(rule: StepRule, iters: usize, dist: ScenarioDistribution, seed: u64) -> RunConfig {
    let opts = SolverOptions::default();
    let s = Scenario::two_phase(1.5, 4.0, 1, 10.0, 0.0).unwrap();
    let mesh = generate_mesh(14, &[Inclusion::circle(0.5, 0.5, 0.2)]).unwrap();
    let tmesh = generate_mesh(14, &[Inclusion::ellipse(0.5, 0.5, 0.28, 0.16, 0.5)]).unwrap();
    let target: Arc<TargetMeasurement> = Arc::new(generate_target(&tmesh, &s, &opts).unwrap());
    let mut cfg = RunConfig::new(mesh, target, dist, rule, iters);
    cfg.seed = seed;
    cfg
}

pub fn armijo_sufficient_decrease(seed: u64) -> Check {
    let cfg = small_run(StepRule::armijo(400.0, 0.5, 1e-4), 8, ScenarioDistribution::truncated(0.01).unwrap(), seed);
    let r = run_optimization(&cfg).map_err(|e| e.to_string())?;
    ensure!(r.abort.is_none(), "aborted: {:?}", r.abort);
    let c = 1e-4;
    for h in r.history.iter().filter(|h| h.accepted) {
        let jt = h.j_trial.ok_or("accepted step without trial value")?;
        ensure!(jt <= h.j_sample - h.step * c * h.grad_norm_sq, "iteration {}: {jt} > {} - {} {c} {}", h.n, h.j_sample, h.step, h.grad_norm_sq);
    }
    Ok(())
}

pub fn deterministic_descent_monotone() -> Check {
    let cfg = small_run(StepRule::armijo(400.0, 0.5, 1e-4), 8, ScenarioDistribution::deterministic(1.5, 4.0, 10.0, 0.0), 0);
    let r = run_optimization(&cfg).map_err(|e| e.to_string())?;
    ensure!(r.abort.is_none(), "aborted: {:?}", r.abort);
    let js: Vec<f64> = r.history.iter().filter(|h| h.accepted).map(|h| h.j_sample).collect();
    ensure!(js.len() >= 2, "too few accepted steps");
    ensure!(js.windows(2).all(|w| w[1] <= w[0]), "single-sample J increased: {js:?}");
    Ok(())
}

pub fn history_deterministic(seed: u64) -> Check {
    let mut cfg = small_run(StepRule::damped_armijo(400.0, 0.5, 1e-4), 4, ScenarioDistribution::truncated(0.2).unwrap(), seed);
    cfg.estimate_m = 3;
    cfg.estimate_every = 2;
    let a = run_optimization(&cfg).map_err(|e| e.to_string())?;
    let b = run_optimization(&cfg).map_err(|e| e.to_string())?;
    ensure!(a.history == b.history, "histories differ");
    ensure!(history_csv(&a.history) == history_csv(&b.history), "CSV differs");
    ensure!(a.final_mesh.vertices() == b.final_mesh.vertices(), "final meshes differ");
    Ok(())
}

/// Robbins-Monro with a large step: every mesh the run accepts is valid.
pub fn guard_sound(seed: u64) -> Check {
    let cfg = small_run(StepRule::robbins_monro(5000.0), 6, ScenarioDistribution::truncated(0.2).unwrap(), seed);
    let mut meshes = Vec::new();
    let r = stochastic_shape::optimizer::run_optimization_with(&cfg, &mut |snap| {
        meshes.push(snap.state.mesh().clone());
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    ensure!(r.abort.is_none(), "aborted: {:?}", r.abort);
    ensure!(r.history.iter().any(|h| h.backtracks > 0), "guard never engaged, step too small to test it");
    meshes.push(r.final_mesh);
    ensure!(meshes.iter().all(|m| m.validate().is_empty()), "an accepted mesh fails validation");
    Ok(())
}

// ---- cli ----

pub fn outputs_well_formed(seed: u64) -> Check {
    let cfg = small_run(StepRule::armijo(400.0, 0.5, 1e-4), 3, ScenarioDistribution::truncated(0.01).unwrap(), seed);
    let r = run_optimization(&cfg).map_err(|e| e.to_string())?;
    let csv = history_csv(&r.history);
    ensure!(csv.lines().count() == 1 + r.history.len(), "CSV rows {} for {} iterations", csv.lines().count() - 1, r.history.len());
    let mesh = &r.final_mesh;
    let text = vtk(mesh, "final", &PointData::default());
    let lines: Vec<&str> = text.lines().collect();
    ensure!(lines[0] == "# vtk DataFile Version 3.0", "bad header");
    ensure!(lines[2] == "ASCII" && lines[3] == "DATASET UNSTRUCTURED_GRID", "bad dataset");
    let ct = lines.iter().position(|l| *l == format!("CELL_TYPES {}", mesh.n_triangles())).ok_or("no CELL_TYPES")?;
    ensure!(lines[ct + 1..=ct + mesh.n_triangles()].iter().all(|l| *l == "5"), "non-triangle cell type");
    ensure!(triangle_quality(mesh).inverted == 0, "inverted triangles in final mesh");
    Ok(())
}

/// Norm helper used by the acceptance suite.
pub fn nodal_l2(mesh: &TriMesh, f: &NodalField) -> f64 {
    l2_norm(mesh, f)
}

pub fn mass_matrix_norm(mesh: &TriMesh, v: &[f64]) -> f64 {
    dot(v, &assemble_mass(mesh).mul(v)).sqrt()
}
