#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kercol::assembly::{build_weights, theta_default, WeightScheme};
use kercol::experiments::{
    emit_outputs, fd_reference_pde4, fit_groups, parse_config_text, run_convergence, solve_case, CaseParams,
    ConfigMap, Evaluation, Method, RunConfig,
};
use kercol::geometry::{
    boundary_subset, fill_distance, oversample_per_axis, tensor_grid, Point, TransformKind, DEFAULT_PROBE_N,
};
use kercol::kernels::MaternSpec;
use kercol::pde::{make_problem, EllipticOperator, ProblemKind};
use kercol::stability::{
    boundary_riemann_points, check_bound, lower_riemann_points, norm_equiv_constants, stability_rayleigh,
    FineQuadrature, RiemannSelection,
};
use kercol::{Error, Result};

#[derive(Parser)]
#[command(name = "kercol", version, about = "Weighted least-squares Matern kernel collocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence sweep; writes records.csv, rates.csv and SVG plots.
    Converge(ConvergeArgs),
    /// Constructive checks of the stability estimates.
    Stability(StabilityArgs),
    /// One solve, reporting its error against the reference.
    Solve(SolveArgs),
    /// Finite-difference reference for problem 4.
    Reference(ReferenceArgs),
}

#[derive(clap::Args)]
struct ConvergeArgs {
    /// `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pde: Option<String>,
    /// vls-tp, wls-id, wls-rd, a comma list, or all.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    /// Values or ranges, e.g. `1:0.5:4`.
    #[arg(long)]
    gamma: Option<String>,
    /// Centres per axis, e.g. `9,13,17`.
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// identity, sine or signed-square.
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    eval_n: Option<String>,
    /// Log the condition number of each weighted normal matrix.
    #[arg(long)]
    log_cond: bool,
    /// Write zeros for wall times so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    no_plots: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Lemma1,
    Lemma2,
    Equiv,
    Rayleigh,
}

#[derive(clap::Args)]
struct StabilityArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long, default_value_t = 4)]
    tau: u32,
    /// Trial centres per axis.
    #[arg(long, default_value_t = 9)]
    nx: usize,
    #[arg(long, default_value_t = 5.0)]
    eps: f64,
    /// Seeds the coefficients of the test function in the Riemann checks.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Nodes per axis of the reference quadrature.
    #[arg(long, default_value_t = 129)]
    fine: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, default_value = "1")]
    pde: String,
    #[arg(long, default_value = "wls-id")]
    method: String,
    #[arg(long, default_value_t = 4)]
    tau: u32,
    #[arg(long, default_value_t = 17)]
    nx: usize,
    #[arg(long, default_value_t = 3.0)]
    gamma: f64,
    #[arg(long, default_value_t = 5.0)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "identity")]
    transform: String,
    #[arg(long, default_value_t = 86)]
    eval_n: usize,
    /// Writes `x,y,u,u_ref` on the evaluation lattice.
    #[arg(long)]
    dump_solution: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReferenceArgs {
    #[arg(long, default_value = "4")]
    pde: String,
    #[arg(long, default_value_t = 257)]
    n: usize,
    #[arg(long, default_value = "reference.csv")]
    out: PathBuf,
}

/// Anything that should end the run with a nonzero status.
enum Failure {
    Error(Error),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Converge(a) => converge(a),
        Command::Stability(a) => stability(a),
        Command::Solve(a) => solve(a),
        Command::Reference(a) => reference(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn converge(a: ConvergeArgs) -> Outcome {
    let mut map = match &a.config {
        Some(path) => parse_config_text(&fs::read_to_string(path).map_err(|e| io_error(path, e))?)?,
        None => ConfigMap::new(),
    };
    let flags = [
        ("pde", &a.pde),
        ("method", &a.method),
        ("tau", &a.tau),
        ("gamma", &a.gamma),
        ("nx", &a.nx),
        ("eps", &a.eps),
        ("seed", &a.seed),
        ("out", &a.out),
        ("transform", &a.transform),
        ("eval_n", &a.eval_n),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    if a.log_cond {
        map.insert("log_cond".into(), "true".into());
    }
    if a.no_timing {
        map.insert("timing".into(), "false".into());
    }
    let cfg = RunConfig::from_map(&map)?;

    let records = run_convergence(&cfg)?;
    let fits = fit_groups(&records);
    let written = emit_outputs(&records, &fits, &cfg.output_dir, !a.no_plots)?;

    for (key, fit) in &fits {
        let label = format!("{} {} tau={} gamma={}", key.method, key.pde, key.tau, key.gamma);
        match fit {
            Ok(f) => {
                println!("{label}: slope {:.3} (r^2 {:.3}, {} points)", f.slope, f.r_squared, f.points_used);
                if f.flagged() {
                    eprintln!("warning: {label}: {} of {} records excluded from the fit", f.excluded, f.excluded + f.points_used);
                }
            }
            Err(e) => println!("{label}: no fit ({e})"),
        }
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("{} tau={} gamma={} NX={}: {e}", r.method, r.tau, r.gamma, r.n_x)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("{} of {} cells failed:\n  {}", failed.len(), records.len(), failed.join("\n  "))))
    }
}

/// `v = sum c_j Phi(., x_j)` with coefficients uniform in `[-1, 1]`.
fn test_function(spec: &MaternSpec, nx: usize, seed: u64) -> Result<impl Fn(&Point) -> f64> {
    let x = tensor_grid(nx, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let spec = *spec;
    Ok(move |p: &Point| x.iter().zip(coeffs.iter()).map(|(xj, c)| c * spec.eval(p, xj)).sum())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_error(path, e))?;
    for l in lines {
        writeln!(f, "{l}").map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn stability(a: StabilityArgs) -> Outcome {
    create_dir(&a.out)?;
    let spec = MaternSpec::new(a.tau, 2, a.eps)?;
    let op = EllipticOperator::modified_helmholtz(2);
    let fine = FineQuadrature::trapezoid(a.fine, 2)?;
    match a.check {
        Check::Lemma1 | Check::Lemma2 => {
            let boundary = matches!(a.check, Check::Lemma2);
            let v = test_function(&spec, a.nx, a.seed)?;
            let (pts, wts) = if boundary {
                (&fine.boundary, &fine.boundary_weights)
            } else {
                (&fine.interior, &fine.interior_weights)
            };
            let integral: f64 = pts.iter().zip(wts).map(|(p, w)| w * v(p).powi(2)).sum();
            let name = if boundary { "lemma2" } else { "lemma1" };
            let mut summary = vec![
                "c,h,points,h_P,delta,discrete_sum,delta_sum,cell_sum,integral,bracket,holds,flagged".to_string(),
            ];
            let mut points = vec!["c,h,x,y".to_string()];
            let mut failures = Vec::new();
            for c in [0.5, 1.0] {
                for h in [0.1, 0.05] {
                    let sel: RiemannSelection = if boundary {
                        boundary_riemann_points(&v, 2, c, h, 16)?
                    } else {
                        lower_riemann_points(&v, 2, c, h, 16)?
                    };
                    let chk = check_bound(&sel, integral);
                    let bracket = sel.bracket_holds(c, h);
                    summary.push(format!(
                        "{c},{h},{},{:e},{:e},{:e},{:e},{:e},{integral:e},{bracket},{},{}",
                        sel.points.len(),
                        sel.fill_h_p,
                        sel.cell_edge_delta,
                        sel.discrete_sum,
                        sel.delta_sum,
                        sel.cell_sum,
                        chk.holds,
                        chk.flagged
                    ));
                    points.extend(sel.points.iter().map(|p| format!("{c},{h},{:e},{:e}", p[0], p[1])));
                    println!(
                        "c={c} h={h}: {} points, h_P {:.4}, sum {:.6e} vs integral {integral:.6e}{}",
                        sel.points.len(),
                        sel.fill_h_p,
                        sel.discrete_sum,
                        if chk.holds { "" } else if chk.flagged { " (flagged: cell sum holds)" } else { " FAIL" }
                    );
                    if !chk.passes() || (!boundary && !bracket) {
                        failures.push(format!("c={c} h={h}"));
                    }
                }
            }
            write_lines(&a.out.join(format!("{name}.csv")), &summary)?;
            write_lines(&a.out.join(format!("{name}_points.csv")), &points)?;
            if !failures.is_empty() {
                return Err(Failure::Invariant(format!("{name}: {}", failures.join(", "))));
            }
        }
        Check::Equiv => {
            let x = tensor_grid(a.nx, 2)?;
            let theta = theta_default(fill_distance(&x, DEFAULT_PROBE_N)?)?;
            let (y, z) = boundary_subset(&tensor_grid(oversample_per_axis(3.0, x.len())?, 2)?);
            let w = build_weights(WeightScheme::Trapezoid, &y, &z, &TransformKind::Identity)?;
            let w: Vec<f64> = w.iter().copied().collect();
            let r = norm_equiv_constants(&spec, &op, &x, &y, &z, &w, theta, &fine)?;
            println!("c_low {:.6e}, c_high {:.6e}, spread {:.4} (N_X {}, N_Y {})", r.c_low, r.c_high, r.spread, r.n_x, r.n_y);
            write_lines(
                &a.out.join("equiv.csv"),
                &[
                    "tau,NX,NY,hX,c_low,c_high,spread".into(),
                    format!("{},{},{},{:e},{:e},{:e},{:e}", a.tau, r.n_x, r.n_y, r.h_x, r.c_low, r.c_high, r.spread),
                ],
            )?;
            if !(r.c_low > 0.0 && r.c_high >= r.c_low) {
                return Err(Failure::Invariant(format!("equivalence constants {} and {}", r.c_low, r.c_high)));
            }
        }
        Check::Rayleigh => {
            let x = tensor_grid(a.nx, 2)?;
            let h = fill_distance(&x, DEFAULT_PROBE_N)?;
            let lambda = stability_rayleigh(&spec, &op, &x, theta_default(h)?, &fine, 0)?;
            println!("lambda_min {lambda:.6e} (N_X {}, h_X {h:.4})", x.len());
            write_lines(
                &a.out.join("rayleigh.csv"),
                &["tau,NX,hX,lambda_min".into(), format!("{},{},{h:e},{lambda:e}", a.tau, x.len())],
            )?;
            if !(lambda > 0.0) {
                return Err(Failure::Invariant(format!("lambda_min = {lambda}")));
            }
        }
    }
    Ok(())
}

/// Relative size of the normal-equation gradient above which a solve is
/// reported as not converged.
const STATIONARITY_LIMIT: f64 = 1e-8;

fn solve(a: SolveArgs) -> Outcome {
    let pde = ProblemKind::parse(&a.pde)?;
    let method = Method::parse(&a.method)?;
    let cfg = RunConfig { eps: a.eps, seed: a.seed, transform: TransformKind::parse(&a.transform)?, ..RunConfig::default() };
    let prob = make_problem(pde)?;
    let sol = solve_case(&prob, pde, &CaseParams::from_config(&cfg, method, a.tau, a.gamma, a.nx))?;
    let eval = Evaluation::for_problem(&prob, pde, a.eval_n, cfg.reference_n)?;
    let u = sol.evaluate(&eval.grid);
    let err = kercol::experiments::relative_l2(&u, &eval.reference)?;
    println!(
        "{pde} {method} tau={} gamma={}: N_X {}, N_Y {}, N_Z {}, h_X {:.4e}, kappa_W {:.3}, rank {}{}",
        a.tau,
        a.gamma,
        sol.nodes.x.len(),
        sol.nodes.y.len(),
        sol.nodes.z.len(),
        sol.nodes.h_x,
        sol.kappa_w,
        sol.rank,
        if sol.truncated { " (truncated)" } else { "" }
    );
    println!("relative l2 error {err:.6e}, stationarity {:.2e}", sol.stationarity);
    if let Some(path) = &a.dump_solution {
        let mut lines = vec!["x,y,u,u_ref".to_string()];
        lines.extend(
            eval.grid.iter().zip(u.iter().zip(&eval.reference)).map(|(p, (u, r))| format!("{:e},{:e},{u:e},{r:e}", p[0], p[1])),
        );
        write_lines(path, &lines)?;
        println!("wrote {}", path.display());
    }
    if !(sol.stationarity <= STATIONARITY_LIMIT) {
        return Err(Failure::Invariant(format!("least-squares stationarity {:.2e}", sol.stationarity)));
    }
    Ok(())
}

fn reference(a: ReferenceArgs) -> Outcome {
    if ProblemKind::parse(&a.pde)? != ProblemKind::Pde4 {
        return Err(Error::InvalidArgument(format!("only problem 4 needs a reference, got `{}`", a.pde)).into());
    }
    let sol = fd_reference_pde4(a.n)?;
    sol.write_csv(&a.out)?;
    println!(
        "{} x {} grid, {} iterations, relative residual {:.2e}; wrote {}",
        a.n,
        a.n,
        sol.iterations,
        sol.relative_residual,
        a.out.display()
    );
    Ok(())
}
