//! `fraclap` command line: kernel tables, Dirichlet solves, boundary-layer
//! diagnostics, and the verification suite.
//!
//! Exit codes: 0 success, 1 failed verification checks, 2 configuration or
//! input validation, 3 evaluation error.

mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::{ConfigError, FieldSpec, GridSpec, RunConfig};
use fraclap::domain::Domain;
use fraclap::geom::Point;
use fraclap::kernels::{self, FracParams, KernelValue};
use fraclap::quadrature::{convolve_green, convolve_poisson, RadialTable, ScalarField};
use fraclap::solver;
use fraclap::verify::{run_suite, SuiteConfig};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "fractional Laplacian ball kernels, solves, and checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output destination; overrides output.path from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Walk seed; overrides walk.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on worker threads (results are identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Test hook: scales the kernel normalization constants by (1 + δ).
    #[arg(long, global = true)]
    perturb_constants: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a kernel on a CSV of points (pairs for two-point kernels).
    Kernel {
        #[arg(long)]
        target: KernelTarget,
        #[arg(long)]
        points: PathBuf,
    },
    /// Solve the Dirichlet problem on the configured domain and grid.
    Solve,
    /// Boundary-layer uniqueness diagnostic for a built-in or solved field.
    Diagnose {
        #[arg(long, value_enum, default_value_t = DiagnoseSource::Builtin)]
        source: DiagnoseSource,
    },
    /// Run the verification suite; exits 1 if any check fails.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelTarget {
    Phi,
    Green,
    Poisson,
    GreenExt,
    PoissonExt,
    Gamma,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum DiagnoseSource {
    Builtin,
    Solved,
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }
    fn eval(msg: impl Into<String>) -> Self {
        Failure {
            code: 3,
            msg: msg.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FRACLAP_LOG")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::config("--config <path> is required"))?;
    let mut cfg = RunConfig::from_file(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.walk.seed = seed;
    }
    let out_path: Option<PathBuf> = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.path)));
    let mut params = cfg.frac_params()?;
    if let Some(delta) = cli.perturb_constants {
        params = params.with_perturbed_constants(delta);
    }
    let started = Instant::now();
    let code = match cli.cmd {
        Cmd::Kernel { target, points } => {
            cmd_kernel(&cfg, &params, target, &points, out_path.as_deref())?
        }
        Cmd::Solve => cmd_solve(&cfg, &params, out_path.as_deref())?,
        Cmd::Diagnose { source } => cmd_diagnose(&cfg, &params, source, out_path.as_deref())?,
        Cmd::Verify => cmd_verify(&cfg, &params, out_path.as_deref())?,
    };
    log::info!("completed in {:.3}s", started.elapsed().as_secs_f64());
    Ok(code)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn emit(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Failure::eval(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn read_points_csv(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if vals.len() != cols {
                    return Err(Failure::config(format!(
                        "row {i}: expected {cols} columns, found {}",
                        vals.len()
                    )));
                }
                rows.push(vals);
            }
            Err(_) if i == 0 => continue, // header row
            Err(e) => {
                return Err(Failure::config(format!("row {i}: {e}")));
            }
        }
    }
    Ok(rows)
}

fn kernel_header(n: usize, pair: bool, finite_col: bool) -> String {
    let mut cols: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    if pair {
        cols.extend((1..=n).map(|k| format!("y{k}")));
    }
    cols.push("value".into());
    if finite_col {
        cols.push("finite".into());
    }
    cols.join(",")
}

fn cmd_kernel(
    cfg: &RunConfig,
    params: &FracParams,
    target: KernelTarget,
    points: &Path,
    out: Option<&Path>,
) -> Result<i32, Failure> {
    let n = cfg.params.n;
    let pair = !matches!(target, KernelTarget::Phi | KernelTarget::Gamma);
    let rows = read_points_csv(points, if pair { 2 * n } else { n })?;
    let ball = cfg.domain_ball();
    let need_ball = || {
        ball.ok_or_else(|| {
            Failure::config("this kernel target needs a ball-shaped domain in the config")
        })
    };
    let finite_col = !matches!(target, KernelTarget::Gamma);
    let mut out_text = String::new();
    out_text.push_str(&kernel_header(n, pair, finite_col));
    out_text.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let x = Point::new(&row[..n]);
        let y = if pair { Some(Point::new(&row[n..])) } else { None };
        let kv: Result<KernelValue, String> = match target {
            KernelTarget::Phi => Ok(kernels::phi(params, &x)),
            KernelTarget::Gamma => {
                let v = kernels::gamma_density(params, &x, &cfg.quadrature)
                    .map_err(|e| e.to_string());
                match v {
                    Ok(v) => {
                        out_text.push_str(&row.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(","));
                        out_text.push(',');
                        out_text.push_str(&fmt_f(v));
                        out_text.push('\n');
                        continue;
                    }
                    Err(e) => Err(e),
                }
            }
            KernelTarget::Green => kernels::green_ball(params, &need_ball()?, &x, y.as_ref().unwrap())
                .map_err(|e| e.to_string()),
            KernelTarget::Poisson => {
                kernels::poisson_ball(params, &need_ball()?, &x, y.as_ref().unwrap())
                    .map_err(|e| e.to_string())
            }
            KernelTarget::GreenExt => {
                kernels::green_exterior_ball(params, &need_ball()?, &x, y.as_ref().unwrap())
                    .map_err(|e| e.to_string())
            }
            KernelTarget::PoissonExt => {
                kernels::poisson_exterior_ball(params, &need_ball()?, &x, y.as_ref().unwrap())
                    .map_err(|e| e.to_string())
            }
        };
        match kv {
            Ok(kv) => {
                out_text.push_str(&row.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(","));
                out_text.push(',');
                if kv.finite {
                    out_text.push_str(&fmt_f(kv.value));
                } else {
                    out_text.push_str("inf");
                }
                out_text.push_str(if kv.finite { ",true\n" } else { ",false\n" });
            }
            Err(e) => {
                return Err(Failure::eval(format!("row {i}: {e}")));
            }
        }
    }
    emit(out, &out_text)?;
    Ok(0)
}

fn build_grid(cfg: &RunConfig, dom: &Domain) -> Result<Vec<Point>, Failure> {
    let spec = cfg.grid.clone().unwrap_or(GridSpec::Radial {
        count: 25,
        max_r_fraction: 0.95,
        axis: 0,
    });
    match spec {
        GridSpec::Radial {
            count,
            max_r_fraction,
            axis,
        } => {
            if axis >= dom.dim() {
                return Err(Failure::config("grid axis out of range"));
            }
            let anchor = dom.anchor();
            let dir = Point::axis(dom.dim(), axis);
            let t_exit = dom
                .ray_segments(&anchor, &dir)
                .first()
                .map(|s| s.1)
                .unwrap_or(0.0);
            Ok((0..count)
                .map(|i| {
                    let t = t_exit * max_r_fraction * (i as f64 + 0.5) / count as f64;
                    anchor.offset(&dir, t)
                })
                .collect())
        }
        GridSpec::Points { points } => {
            let mut out = Vec::with_capacity(points.len());
            for (i, c) in points.iter().enumerate() {
                if c.len() != dom.dim() {
                    return Err(Failure::config(format!(
                        "grid point {i} has wrong dimension"
                    )));
                }
                let p = Point::new(c);
                if !dom.contains(&p) {
                    return Err(Failure::config(format!(
                        "grid point {i} lies outside the domain"
                    )));
                }
                out.push(p);
            }
            Ok(out)
        }
    }
}

fn is_zero_spec(s: &Option<FieldSpec>) -> bool {
    match s {
        None | Some(FieldSpec::Zero) => true,
        Some(FieldSpec::Constant { value }) => *value == 0.0,
        _ => false,
    }
}

fn cmd_solve(cfg: &RunConfig, params: &FracParams, out: Option<&Path>) -> Result<i32, Failure> {
    let out = out.ok_or_else(|| Failure::config("solve needs an output path (--out or output.path)"))?;
    let dom = cfg.build_domain()?;
    let grid = build_grid(cfg, &dom)?;
    let f = cfg.build_field(&cfg.problem.f)?;
    let g = cfg.build_field(&cfg.problem.g)?;
    let n = cfg.params.n;

    let (csv, summary) = if !is_zero_spec(&cfg.problem.c) {
        let c = cfg.build_field(&cfg.problem.c)?;
        if !is_zero_spec(&cfg.problem.g) {
            return Err(Failure::config(
                "potential solves support zero exterior data only",
            ));
        }
        let ps = solver::solve_with_potential(params, &dom, &f, &c, &grid, cfg.walk, &cfg.quadrature)
            .map_err(|e| Failure::eval(e.to_string()))?;
        let mut csv = String::new();
        csv.push_str(&field_header(n, true, false));
        for (i, x) in grid.iter().enumerate() {
            push_row(&mut csv, x, &[ps.values[i], ps.std_errors[i]]);
        }
        let summary = json!({
            "representation": "monte-carlo-fixed-point",
            "params": {"n": cfg.params.n, "s": cfg.params.s},
            "seed": cfg.walk.seed,
            "walkers": cfg.walk.walkers,
            "grid_size": grid.len(),
            "iterations": ps.iterations,
            "residuals": ps.residuals,
            "contraction_product": ps.contraction_product,
        });
        (csv, summary)
    } else if let Some(ball) = cfg.domain_ball() {
        let mut csv = String::new();
        csv.push_str(&field_header(n, false, false));
        let skip_green = is_zero_spec(&cfg.problem.f);
        let skip_poisson = is_zero_spec(&cfg.problem.g);
        for x in &grid {
            let mut v = 0.0;
            if !skip_green {
                v += convolve_green(params, &ball, &f, x, &cfg.quadrature)
                    .map_err(|e| Failure::eval(e.to_string()))?;
            }
            if !skip_poisson {
                v += convolve_poisson(params, &ball, &g, x, &cfg.quadrature)
                    .map_err(|e| Failure::eval(e.to_string()))?;
            }
            push_row(&mut csv, x, &[v]);
        }
        let summary = json!({
            "representation": "ball-quadrature",
            "params": {"n": cfg.params.n, "s": cfg.params.s},
            "grid_size": grid.len(),
            "rel_tol": cfg.quadrature.rel_tol,
        });
        (csv, summary)
    } else {
        let results = solver::solve_field(params, &dom, &f, &g, &grid, cfg.walk, &cfg.quadrature)
            .map_err(|e| Failure::eval(e.to_string()))?;
        let mut csv = String::new();
        csv.push_str(&field_header(n, true, true));
        let mut censored_total = 0usize;
        let mut steps_acc = 0.0;
        for (x, est) in &results {
            push_row(
                &mut csv,
                x,
                &[est.mean, est.std_error, est.mean_steps],
            );
            censored_total += est.censored;
            steps_acc += est.mean_steps;
        }
        let summary = json!({
            "representation": "monte-carlo",
            "params": {"n": cfg.params.n, "s": cfg.params.s},
            "seed": cfg.walk.seed,
            "walkers": cfg.walk.walkers,
            "grid_size": grid.len(),
            "censored_total": censored_total,
            "mean_steps": steps_acc / results.len().max(1) as f64,
        });
        (csv, summary)
    };
    emit(Some(out), &csv)?;
    let summary_path = out.with_extension("summary.json");
    emit(
        Some(&summary_path),
        &(serde_json::to_string_pretty(&summary).unwrap() + "\n"),
    )?;
    Ok(0)
}

fn field_header(n: usize, with_err: bool, with_steps: bool) -> String {
    let mut cols: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    cols.push("value".into());
    if with_err {
        cols.push("std_error".into());
    }
    if with_steps {
        cols.push("steps".into());
    }
    cols.join(",") + "\n"
}

fn push_row(csv: &mut String, x: &Point, vals: &[f64]) {
    let mut cols: Vec<String> = x.coords().iter().map(|v| fmt_f(*v)).collect();
    cols.extend(vals.iter().map(|v| fmt_f(*v)));
    csv.push_str(&cols.join(","));
    csv.push('\n');
}

fn cmd_diagnose(
    cfg: &RunConfig,
    params: &FracParams,
    source: DiagnoseSource,
    out: Option<&Path>,
) -> Result<i32, Failure> {
    let dom = cfg.build_domain()?;
    let field = match source {
        DiagnoseSource::Builtin => {
            let spec = cfg
                .diagnostic_field
                .clone()
                .ok_or_else(|| Failure::config("diagnose --source builtin needs diagnostic_field"))?;
            cfg.build_field(&Some(spec))?
        }
        DiagnoseSource::Solved => solved_radial_field(cfg, params, &dom)?,
    };
    let ladder = cfg.eps_ladder(&dom);
    let verdict = solver::uniqueness_diagnostic(params, &dom, &field, &ladder, &cfg.quadrature)
        .map_err(|e| Failure::eval(e.to_string()))?;
    let payload = json!({
        "eps": verdict.eps_ladder,
        "d_values": verdict.d_values,
        "classification": verdict.classification,
        "fitted_limit": verdict.fitted_limit,
    });
    emit(out, &(serde_json::to_string_pretty(&payload).unwrap() + "\n"))?;
    Ok(0)
}

/// Solve on a graded radial grid and wrap the values in an interpolating
/// radial field. Supports ball domains with radially symmetric data, which
/// covers the built-in problems.
fn solved_radial_field(
    cfg: &RunConfig,
    params: &FracParams,
    _dom: &Domain,
) -> Result<ScalarField, Failure> {
    let ball = cfg.domain_ball().ok_or_else(|| {
        Failure::config("diagnose --source solved supports ball domains with radial data")
    })?;
    let f = cfg.build_field(&cfg.problem.f)?;
    let g = cfg.build_field(&cfg.problem.g)?;
    let skip_green = is_zero_spec(&cfg.problem.f);
    let skip_poisson = is_zero_spec(&cfg.problem.g);
    let mut radii: Vec<f64> = (0..48)
        .map(|i| ball.radius * i as f64 / 48.0)
        .collect();
    for k in 2..=20 {
        radii.push(ball.radius * (1.0 - 0.5f64.powi(k)));
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let mut vals = Vec::with_capacity(radii.len());
    let c = ball.center();
    for &t in &radii {
        let mut x = c;
        x.set(0, x.get(0) + t);
        let mut v = 0.0;
        if !skip_green {
            v += convolve_green(params, &ball, &f, &x, &cfg.quadrature)
                .map_err(|e| Failure::eval(e.to_string()))?;
        }
        if !skip_poisson {
            v += convolve_poisson(params, &ball, &g, &x, &cfg.quadrature)
                .map_err(|e| Failure::eval(e.to_string()))?;
        }
        vals.push(v);
    }
    // boundary value from the exterior data side (zero for the solve route)
    radii.push(ball.radius);
    vals.push(0.0);
    let table = RadialTable::new(radii, vals);
    let dim = cfg.params.n;
    Ok(ScalarField::from_fn(dim, move |x: &Point| {
        let t = x.dist(&c);
        if t >= ball.radius {
            0.0
        } else {
            table.eval(t)
        }
    })
    .with_support(Domain::ball(ball)))
}

fn cmd_verify(cfg: &RunConfig, params: &FracParams, out: Option<&Path>) -> Result<i32, Failure> {
    let suite = SuiteConfig {
        seed: cfg.walk.seed,
        samples: cfg.verify.samples,
        quad: cfg.quadrature,
        include_lens_monte_carlo: cfg.verify.include_lens_monte_carlo,
    };
    let reports = run_suite(params, &suite);
    let all_pass = reports.iter().all(|r| r.pass);
    let payload = json!({
        "n": params.n,
        "s": params.s,
        "seed": suite.seed,
        "all_pass": all_pass,
        "checks": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    emit(out, &(serde_json::to_string_pretty(&payload).unwrap() + "\n"))?;
    Ok(if all_pass { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        let s = fmt_f(std::f64::consts::PI);
        assert!(s.starts_with("3.1415926535897931"), "{s}");
        // round-trips exactly
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }
}
