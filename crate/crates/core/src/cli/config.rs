//! Flat `key = value` run configuration with `#` comments.
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::Inclusion;
use crate::optimizer::StepRule;
use crate::stochastics::{Component, ScenarioDistribution, TruncNormalParams};

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "mesh",
    "target",
    "iters",
    "seed",
    "step.rule",
    "step.alpha",
    "step.rho",
    "step.c",
    "step.exponent",
    "step.damping",
    "step.period",
    "mu_min",
    "mu_max",
    "estimate.m",
    "estimate.every",
    "snapshot.every",
    "solver.tol",
    "guard",
    "kappa0",
    "kappa_int",
    "g",
    "f",
];

/// Where the initial mesh comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Generate { resolution: usize, inclusions: Vec<Inclusion> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeConfig {
    pub mesh: MeshSource,
    /// Target stem: `<stem>.mesh` and `<stem>.ybar`.
    pub target: PathBuf,
    pub iters: usize,
    pub seed: u64,
    pub rule: StepRule,
    pub mu_min: f64,
    pub mu_max: f64,
    pub estimate_m: usize,
    pub estimate_every: usize,
    /// Write snapshots every this many iterations; 0 writes only the first
    /// and last.
    pub snapshot_every: usize,
    pub solver_tol: f64,
    pub guard: bool,
    pub distribution: ScenarioDistribution,
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

fn cerr(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Config { line, key: key.to_string(), msg: msg.into() }
}

/// Splits on commas that are not nested in parentheses.
pub(crate) fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

/// `name(a, b, ...)` to `(name, [a, b, ...])`.
fn call(s: &str) -> Option<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(')?;
    let inner = s.strip_suffix(')')?.get(open + 1..)?;
    let args = if inner.trim().is_empty() { Vec::new() } else { split_top_level(inner) };
    Some((s[..open].trim(), args))
}

fn numbers(args: &[&str]) -> std::result::Result<Vec<f64>, String> {
    args.iter()
        .map(|a| match a.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!("`{a}` is not a finite number")),
        })
        .collect()
}

/// `circle(cx, cy, r)` or `ellipse(cx, cy, a, b, angle)`.
pub fn parse_inclusion(s: &str) -> std::result::Result<Inclusion, String> {
    let (name, args) = call(s).ok_or_else(|| format!("expected circle(...) or ellipse(...), found `{s}`"))?;
    let x = numbers(&args)?;
    match (name, x.len()) {
        ("circle", 3) => Ok(Inclusion::circle(x[0], x[1], x[2])),
        ("ellipse", 5) => Ok(Inclusion::ellipse(x[0], x[1], x[2], x[3], x[4])),
        ("circle", n) => Err(format!("circle takes 3 arguments, found {n}")),
        ("ellipse", n) => Err(format!("ellipse takes 5 arguments, found {n}")),
        _ => Err(format!("unknown inclusion shape `{name}`")),
    }
}

/// `const(v)` or `trunc_normal(mean, std, lo, hi)`.
pub fn parse_component(s: &str) -> std::result::Result<Component, String> {
    let (name, args) = call(s).ok_or_else(|| format!("expected const(v) or trunc_normal(mean, std, lo, hi), found `{s}`"))?;
    let x = numbers(&args)?;
    match (name, x.len()) {
        ("const", 1) => Ok(Component::Const(x[0])),
        ("trunc_normal", 4) => {
            TruncNormalParams::new(x[0], x[1], x[2], x[3]).map(Component::TruncNormal).map_err(|e| e.to_string())
        }
        ("const", n) => Err(format!("const takes 1 argument, found {n}")),
        ("trunc_normal", n) => Err(format!("trunc_normal takes 4 arguments, found {n}")),
        _ => Err(format!("unknown distribution `{name}`")),
    }
}

/// A mesh path, or `generate(resolution, shape, shape, ...)`.
fn parse_mesh_source(s: &str, base: &Path) -> std::result::Result<MeshSource, String> {
    match call(s) {
        Some(("generate", args)) => {
            let (res, shapes) = args.split_first().ok_or("generate needs a resolution")?;
            let resolution = res.parse::<usize>().map_err(|_| format!("invalid resolution `{res}`"))?;
            let inclusions = shapes.iter().map(|s| parse_inclusion(s)).collect::<std::result::Result<_, _>>()?;
            Ok(MeshSource::Generate { resolution, inclusions })
        }
        _ => Ok(MeshSource::File(base.join(s))),
    }
}

fn parse_num<T: std::str::FromStr>(e: &Entry, key: &str) -> Result<T> {
    e.value.parse().map_err(|_| cerr(e.line, key, format!("invalid value `{}`", e.value)))
}

fn parse_float(e: &Entry, key: &str) -> Result<f64> {
    let x: f64 = parse_num(e, key)?;
    if !x.is_finite() {
        return Err(cerr(e.line, key, format!("non-finite value `{}`", e.value)));
    }
    Ok(x)
}

/// Parses config text; relative paths are joined onto `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<OptimizeConfig> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    let n_lines = text.lines().count();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| cerr(line, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
            return Err(cerr(line, key, "unknown key"));
        };
        if value.is_empty() {
            return Err(cerr(line, key, "missing value"));
        }
        if let Some(prev) = entries.insert(key, Entry { line, value }) {
            return Err(cerr(line, key, format!("duplicate key, first set on line {}", prev.line)));
        }
    }
    let missing = |key: &str| cerr(n_lines + 1, key, "required key missing");

    let e = entries.get("mesh").ok_or_else(|| missing("mesh"))?;
    let mesh = parse_mesh_source(e.value, base).map_err(|m| cerr(e.line, "mesh", m))?;
    let e = entries.get("target").ok_or_else(|| missing("target"))?;
    let target = base.join(Path::new(e.value).with_extension(""));
    let e = entries.get("iters").ok_or_else(|| missing("iters"))?;
    let iters: usize = parse_num(e, "iters")?;
    if iters == 0 {
        return Err(cerr(e.line, "iters", "iteration count must be at least 1"));
    }

    let get_usize = |key: &str, default: usize| entries.get(key).map_or(Ok(default), |e| parse_num::<usize>(e, key));
    let get_f64 = |key: &str, default: f64| entries.get(key).map_or(Ok(default), |e| parse_float(e, key));
    let get_comp = |key: &str, default: f64| {
        entries
            .get(key)
            .map_or(Ok(Component::Const(default)), |e| parse_component(e.value).map_err(|m| cerr(e.line, key, m)))
    };

    let seed = entries.get("seed").map_or(Ok(0), |e| parse_num::<u64>(e, "seed"))?;
    let rule = parse_rule(&entries)?;
    let mu_min = get_f64("mu_min", 10.0)?;
    let mu_max = get_f64("mu_max", 25.0)?;
    if !(mu_min > 0.0 && mu_min <= mu_max) {
        let line = entries.get("mu_min").or(entries.get("mu_max")).map_or(0, |e| e.line);
        return Err(cerr(line, "mu_min", format!("need 0 < mu_min <= mu_max, got {mu_min}, {mu_max}")));
    }
    let solver_tol = get_f64("solver.tol", crate::fem::DEFAULT_TOL)?;
    if !(solver_tol > 0.0) {
        return Err(cerr(entries["solver.tol"].line, "solver.tol", "tolerance must be positive"));
    }
    let guard = match entries.get("guard") {
        None => true,
        Some(e) => match e.value {
            "on" => true,
            "off" => false,
            v => return Err(cerr(e.line, "guard", format!("expected on or off, found `{v}`"))),
        },
    };

    Ok(OptimizeConfig {
        mesh,
        target,
        iters,
        seed,
        rule,
        mu_min,
        mu_max,
        estimate_m: get_usize("estimate.m", 0)?,
        estimate_every: get_usize("estimate.every", 0)?,
        snapshot_every: get_usize("snapshot.every", 0)?,
        solver_tol,
        guard,
        distribution: ScenarioDistribution {
            kappa0: get_comp("kappa0", 1.5)?,
            kappa_int: get_comp("kappa_int", 4.0)?,
            g: get_comp("g", 10.0)?,
            f: get_comp("f", 0.0)?,
            common_inclusion_kappa: true,
        },
    })
}

fn parse_rule(entries: &HashMap<&str, Entry>) -> Result<StepRule> {
    let name = entries.get("step.rule").map_or("armijo", |e| e.value);
    let allowed: &[&str] = match name {
        "robbins_monro" => &["step.alpha", "step.exponent"],
        "armijo" => &["step.alpha", "step.rho", "step.c"],
        "damped_armijo" => &["step.alpha", "step.rho", "step.c", "step.damping", "step.period"],
        other => {
            let e = &entries["step.rule"];
            return Err(cerr(e.line, "step.rule", format!("expected robbins_monro, armijo or damped_armijo, found `{other}`")));
        }
    };
    for (&key, e) in entries {
        if key.starts_with("step.") && key != "step.rule" && !allowed.contains(&key) {
            return Err(cerr(e.line, key, format!("not used by step rule {name}")));
        }
    }
    let f = |key: &str, default: f64| entries.get(key).map_or(Ok(default), |e| parse_float(e, key));
    let rule = match name {
        "robbins_monro" => StepRule::RobbinsMonro { alpha: f("step.alpha", 800.0)?, exponent: f("step.exponent", 0.85)? },
        "armijo" => StepRule::armijo(f("step.alpha", 50.0)?, f("step.rho", 0.5)?, f("step.c", 1e-4)?),
        _ => {
            let mut r = StepRule::damped_armijo(f("step.alpha", 400.0)?, f("step.rho", 0.5)?, f("step.c", 1e-4)?);
            if let StepRule::DampedArmijo { damping, period, .. } = &mut r {
                *damping = f("step.damping", *damping)?;
                if let Some(e) = entries.get("step.period") {
                    *period = parse_num(e, "step.period")?;
                }
            }
            r
        }
    };
    rule.validate().map_err(|err| {
        // attribute the failure to the first step key present
        let (key, line) = ["step.alpha", "step.rho", "step.c", "step.exponent", "step.damping", "step.period", "step.rule"]
            .iter()
            .find_map(|k| entries.get(k).map(|e| (*k, e.line)))
            .unwrap_or(("step.rule", 0));
        cerr(line, key, err.to_string())
    })?;
    Ok(rule)
}
