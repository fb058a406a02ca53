//! The `ssgm` command line: argument definitions, the four commands and
//! their exit codes (0 success, 1 runtime failure, 2 usage or input error).

pub mod config;
pub mod output;
pub mod presets;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_component, parse_config, parse_inclusion, MeshSource, OptimizeConfig, KEYS};
use output::PointData;

use crate::fem::{nodal_weights, SolverOptions};
use crate::mesh::{generate_mesh, parse_mesh, parse_mesh_lenient, triangle_quality, write_mesh, Inclusion, TriMesh};
use crate::optimizer::{run_optimization_with, RunConfig, StepRule};
use crate::shape_calculus::{generate_target, TargetMeasurement};
use crate::stochastics::Scenario;

#[derive(Debug, Parser)]
#[command(name = "ssgm", version, about = "Stochastic shape-gradient interface identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled mesh of the unit square.
    MeshGen(MeshGenArgs),
    /// Solve the state on a target geometry and store it as a measurement.
    GenerateTarget(GenerateTargetArgs),
    /// Run the stochastic gradient method from a config file.
    Optimize(OptimizeArgs),
    /// Report aspect ratios and inverted triangles of a mesh file.
    QualityReport(QualityArgs),
}

fn inclusion_arg(kind: &'static str) -> impl Fn(&str) -> Result<Inclusion, String> + Clone {
    move |s: &str| parse_inclusion(&format!("{kind}({s})"))
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Grid cells per side.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Circle `cx,cy,r`; repeatable.
    #[arg(long, value_parser = inclusion_arg("circle"), allow_hyphen_values = true)]
    pub circle: Vec<Inclusion>,
    /// Ellipse `cx,cy,a,b,angle`; repeatable. Labels follow the circles.
    #[arg(long, value_parser = inclusion_arg("ellipse"), allow_hyphen_values = true)]
    pub ellipse: Vec<Inclusion>,
}

impl GeometryArgs {
    fn inclusions(&self) -> Vec<Inclusion> {
        self.circle.iter().chain(&self.ellipse).copied().collect()
    }
}

#[derive(Debug, Args)]
pub struct MeshGenArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateTargetArgs {
    /// Existing mesh file; otherwise the geometry flags are used.
    #[arg(long, conflicts_with_all = ["resolution", "circle", "ellipse"])]
    pub mesh: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 1.5)]
    pub kappa0: f64,
    #[arg(long, default_value_t = 4.0)]
    pub kappa_int: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub g: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub f: f64,
    #[arg(long, default_value_t = crate::fem::DEFAULT_TOL)]
    pub tol: f64,
    /// Output stem; writes `<out>.mesh` and `<out>.ybar`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub config: PathBuf,
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    pub mesh: PathBuf,
    /// Per-triangle CSV output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// A failed command: exit code and message.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn usage(e: impl fmt::Display) -> CliError {
    CliError { code: 2, message: e.to_string() }
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError { code: 1, message: e.to_string() }
}

type CliResult = Result<(), CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn say(out: &mut dyn Write, text: fmt::Arguments) -> CliResult {
    writeln!(out, "{text}").map_err(runtime)
}

fn with_suffix(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Reads `<stem>.mesh` and `<stem>.ybar`.
pub fn load_target(stem: &Path) -> crate::Result<TargetMeasurement> {
    let mesh = parse_mesh(&fs::read_to_string(with_suffix(stem, "mesh"))?)?;
    let values = output::parse_values(&fs::read_to_string(with_suffix(stem, "ybar"))?)?;
    TargetMeasurement::new(&mesh, values, None)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::MeshGen(a) => mesh_gen(&a, out),
        Command::GenerateTarget(a) => cmd_generate_target(&a, out),
        Command::Optimize(a) => optimize(&a, out),
        Command::QualityReport(a) => quality_report(&a, out),
    }
}

fn generate(geometry: &GeometryArgs) -> Result<TriMesh, CliError> {
    let res = geometry.resolution.ok_or_else(|| usage("--resolution is required to generate a mesh"))?;
    generate_mesh(res, &geometry.inclusions()).map_err(usage)
}

fn mesh_gen(a: &MeshGenArgs, out: &mut dyn Write) -> CliResult {
    let mesh = generate(&a.geometry)?;
    write(&a.out, &write_mesh(&mesh))?;
    let q = triangle_quality(&mesh);
    say(out, format_args!("wrote {}", a.out.display()))?;
    say(out, format_args!("triangles {} vertices {} interface loops {}", mesh.n_triangles(), mesh.n_vertices(), mesh.interface_loops().len()))?;
    say(out, format_args!("aspect ratio min {:.4} mean {:.4} max {:.4}", q.min, q.mean, q.max))
}

fn cmd_generate_target(a: &GenerateTargetArgs, out: &mut dyn Write) -> CliResult {
    let mesh = match &a.mesh {
        Some(p) => parse_mesh(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => generate(&a.geometry)?,
    };
    let scenario =
        Scenario::two_phase(a.kappa0, a.kappa_int, mesh.max_label() as usize, a.g, a.f).map_err(usage)?;
    let opts = SolverOptions { tol: a.tol, ..SolverOptions::default() };
    let target = generate_target(&mesh, &scenario, &opts).map_err(runtime)?;
    let integral: f64 = nodal_weights(&mesh).iter().zip(target.values.values()).map(|(w, y)| w * y).sum();
    write(&with_suffix(&a.out, "mesh"), &write_mesh(&mesh))?;
    write(&with_suffix(&a.out, "ybar"), &output::write_values(&target.values))?;
    say(out, format_args!("wrote {0}.mesh and {0}.ybar", a.out.display()))?;
    say(out, format_args!("triangles {} integral of ybar {:.3e}", mesh.n_triangles(), integral))
}

fn build_run_config(cfg: &OptimizeConfig) -> Result<RunConfig, CliError> {
    let mesh = match &cfg.mesh {
        MeshSource::File(p) => parse_mesh(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        MeshSource::Generate { resolution, inclusions } => generate_mesh(*resolution, inclusions).map_err(usage)?,
    };
    let target = load_target(&cfg.target).map_err(|e| usage(format!("target {}: {e}", cfg.target.display())))?;
    let mut rc = RunConfig::new(mesh, Arc::new(target), cfg.distribution.clone(), cfg.rule, cfg.iters);
    rc.seed = cfg.seed;
    rc.estimate_m = cfg.estimate_m;
    rc.estimate_every = cfg.estimate_every;
    rc.mu_min = cfg.mu_min;
    rc.mu_max = cfg.mu_max;
    rc.solver.tol = cfg.solver_tol;
    rc.guard = cfg.guard;
    rc.validate().map_err(usage)?;
    Ok(rc)
}

fn rule_name(rule: &StepRule) -> &'static str {
    match rule {
        StepRule::RobbinsMonro { .. } => "robbins_monro",
        StepRule::Armijo { .. } => "armijo",
        StepRule::DampedArmijo { .. } => "damped_armijo",
    }
}

fn optimize(a: &OptimizeArgs, out: &mut dyn Write) -> CliResult {
    let text = read(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_config(&text, base).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let rc = build_run_config(&cfg)?;
    let snap_dir = a.out.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(|e| runtime(format!("cannot create {}: {e}", snap_dir.display())))?;

    let every = cfg.snapshot_every;
    let mut observer = |snap: &crate::optimizer::IterationSnapshot| -> crate::Result<()> {
        // the mesh handed over at iteration n is the shape after n - 1 updates
        let k = snap.record.n - 1;
        if k != 0 && (every == 0 || k % every != 0) {
            return Ok(());
        }
        let mesh = snap.state.mesh();
        let pde = &snap.evaluation.pde;
        let data = PointData {
            scalars: vec![("y", &pde.y), ("p", &pde.p), ("mu", &snap.state.lame.mu)],
            vectors: vec![("V", &snap.deformation.field)],
        };
        let stem = snap_dir.join(format!("shape_{k:04}"));
        fs::write(with_suffix(&stem, "mesh"), write_mesh(mesh))?;
        fs::write(with_suffix(&stem, "vtk"), output::vtk(mesh, &format!("shape {k}"), &data))?;
        Ok(())
    };
    let result = run_optimization_with(&rc, &mut observer).map_err(usage)?;

    write(&a.out.join("history.csv"), &output::history_csv(&result.history))?;
    write(&a.out.join("final.mesh"), &write_mesh(&result.final_mesh))?;
    write(&a.out.join("final.vtk"), &output::vtk(&result.final_mesh, "final shape", &PointData::default()))?;
    if let Some(bad) = &result.invalid_mesh {
        write(&a.out.join("invalid.mesh"), &write_mesh(bad))?;
        write(&a.out.join("invalid.vtk"), &output::vtk(bad, "invalid shape", &PointData::default()))?;
    }

    let fmt_est = |e: &Option<crate::optimizer::Estimate>| {
        e.as_ref().map_or("n/a".to_string(), |e| format!("j_hat {:e} v_hat {:e} (m = {})", e.j_hat, e.v_hat, e.samples.len()))
    };
    let q = triangle_quality(&result.final_mesh);
    let mut summary = String::new();
    use std::fmt::Write as _;
    writeln!(summary, "rule {}", rule_name(&cfg.rule)).unwrap();
    writeln!(summary, "seed {}", cfg.seed).unwrap();
    writeln!(summary, "iterations {} of {}", result.history.len(), cfg.iters).unwrap();
    writeln!(summary, "initial {}", fmt_est(&result.initial_estimate)).unwrap();
    writeln!(summary, "final {}", fmt_est(&result.final_estimate)).unwrap();
    writeln!(summary, "final aspect ratio max {:.4} inverted {}", q.max, q.inverted).unwrap();
    if let Some(e) = &result.abort {
        writeln!(summary, "aborted: {e}").unwrap();
    }
    write(&a.out.join("summary.txt"), &summary)?;
    out.write_all(summary.as_bytes()).map_err(runtime)?;

    match result.abort {
        Some(e) => Err(runtime(e)),
        None => Ok(()),
    }
}

fn quality_report(a: &QualityArgs, out: &mut dyn Write) -> CliResult {
    let mesh = parse_mesh_lenient(&read(&a.mesh)?).map_err(|e| usage(format!("{}: {e}", a.mesh.display())))?;
    let q = triangle_quality(&mesh);
    say(out, format_args!("triangles {}", mesh.n_triangles()))?;
    say(out, format_args!("aspect ratio min {:.6} mean {:.6} max {:.6}", q.min, q.mean, q.max))?;
    say(out, format_args!("inverted {}", q.inverted))?;
    if let Some(path) = &a.csv {
        let mut s = String::from("triangle,region,signed_area,aspect_ratio\n");
        for (t, r) in q.ratios.iter().enumerate() {
            let label = mesh.triangles()[t].label;
            s.push_str(&format!("{},{},{},{}\n", t + 1, label, mesh.signed_area(t), r.map_or(String::new(), |v| v.to_string())));
        }
        write(path, &s)?;
    }
    if q.inverted > 0 {
        return Err(runtime(format!("{} inverted triangles", q.inverted)));
    }
    Ok(())
}

