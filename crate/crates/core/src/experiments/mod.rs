//! Convergence sweeps over the benchmark problems.
//!
//! A sweep cell fixes the method, `tau`, `gamma` and the number of trial
//! centres per axis. It builds the regular centres `X`, the oversampled
//! nodes, assembles and solves the weighted system, and measures the relative
//! `l^2` error of the expansion on a regular evaluation lattice.

mod config;
mod fd;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DVector;

pub use config::{parse_config_text, parse_list, parse_range_list, ConfigMap};
pub use fd::{fd_reference_pde4, fd_solve_divergence, GridSolution, FD_TOLERANCE};
pub use output::{emit_outputs, records_csv, render_svg, RECORDS_HEADER};

use crate::assembly::{
    assemble_system, build_weights, evaluate_expansion, theta_default, weight_and_scale, WeightScheme,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    apply_transform, boundary_subset, fill_distance, oversample_per_axis, scattered_cloud_near_line, tensor_grid,
    PointSet, TransformKind, DEFAULT_PROBE_N,
};
use crate::kernels::MaternSpec;
use crate::pde::{make_problem, EllipticProblem, ProblemKind};
use crate::solver::{cond2_normal, solve_lstsq};

/// Errors below this are treated as round-off and left out of rate fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

/// Scattered points added to the regular nodes of problem 4.
pub const PDE4_CLOUD_POINTS: usize = 7338;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Trapezoid weights: a quadrature of the continuous least-squares functional.
    VlsTp,
    /// Unit weights.
    WlsId,
    /// Random weights in `[0.5, 1.5]`.
    WlsRd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::VlsTp, Method::WlsId, Method::WlsRd];

    pub fn name(&self) -> &'static str {
        match self {
            Method::VlsTp => "vls-tp",
            Method::WlsId => "wls-id",
            Method::WlsRd => "wls-rd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vls-tp" | "tp" => Ok(Method::VlsTp),
            "wls-id" | "id" => Ok(Method::WlsId),
            "wls-rd" | "rd" => Ok(Method::WlsRd),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }

    /// `all` or a comma-separated list.
    pub fn parse_many(s: &str) -> Result<Vec<Self>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',').map(Self::parse).collect()
    }

    pub fn scheme(&self, seed: u64) -> WeightScheme {
        match self {
            Method::VlsTp => WeightScheme::Trapezoid,
            Method::WlsId => WeightScheme::Identity,
            Method::WlsRd => WeightScheme::Random { seed },
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Layout of the scattered nodes added for problem 4.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudConfig {
    pub points: usize,
    /// Normal of the line the cloud concentrates around.
    pub normal: [f64; 2],
    pub width: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        // Dense along x - y = 0.
        Self { points: PDE4_CLOUD_POINTS, normal: [1.0, -1.0], width: 0.2 }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub pde: ProblemKind,
    pub methods: Vec<Method>,
    pub tau_list: Vec<u32>,
    pub eps: f64,
    pub gamma_list: Vec<f64>,
    pub nx_axis_list: Vec<usize>,
    /// Applied to the oversampled nodes, never to the centres.
    pub transform: TransformKind,
    pub eval_grid_n: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Log `cond_2` of the weighted normal matrix per record. Costs one SVD.
    pub log_cond: bool,
    /// Write measured wall times; off gives byte-identical reruns.
    pub record_timing: bool,
    /// Per-axis size of the finite-difference reference for problem 4.
    pub reference_n: usize,
    pub cloud: CloudConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pde: ProblemKind::Pde1,
            methods: Method::ALL.to_vec(),
            tau_list: vec![4, 5, 6],
            eps: 5.0,
            gamma_list: (0..7).map(|k| 1.0 + 0.5 * k as f64).collect(),
            nx_axis_list: vec![9, 13, 17, 21, 25, 33, 41],
            transform: TransformKind::Identity,
            eval_grid_n: 86,
            seed: 1,
            output_dir: PathBuf::from("out"),
            log_cond: false,
            record_timing: true,
            reference_n: 513,
            cloud: CloudConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.tau_list.is_empty() || self.gamma_list.is_empty() {
            return Err(Error::Config("methods, tau and gamma lists must be non-empty".into()));
        }
        if self.nx_axis_list.is_empty() {
            return Err(Error::Config("nx list must be non-empty".into()));
        }
        if let Some(n) = self.nx_axis_list.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("need at least 2 centres per axis, got {n}")));
        }
        if let Some(g) = self.gamma_list.iter().find(|&&g| !(g >= 1.0)) {
            return Err(Error::Config(format!("oversampling ratio must be >= 1, got {g}")));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("shape parameter must be positive, got {}", self.eps)));
        }
        if self.eval_grid_n < 2 {
            return Err(Error::Config("evaluation grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub method: Method,
    pub pde: String,
    pub tau: u32,
    pub eps: f64,
    pub gamma: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub h_x: f64,
    /// `NaN` when the cell failed.
    pub rel_l2: f64,
    pub cond_logged: Option<f64>,
    pub kappa_w: Option<f64>,
    pub truncated: bool,
    pub seed: u64,
    pub wall_ms: u64,
    /// `||A^T W r|| / ||A^T W b||` at the computed coefficients.
    pub stationarity: f64,
    pub error: Option<String>,
}

impl ConvergenceRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Node sets of one sweep cell.
#[derive(Clone, Debug)]
pub struct CaseNodes {
    pub x: PointSet,
    pub y: PointSet,
    pub z: PointSet,
    /// Interior and boundary nodes before the transform; weights are built
    /// from these.
    pub y_pre: PointSet,
    pub z_pre: PointSet,
    pub h_x: f64,
}

/// Builds `X` with `n_x_axis` centres per axis and the oversampled nodes.
///
/// Problem 4 uses `ceil(gamma n_x) + 1` regular nodes per axis joined with a
/// scattered cloud; the other problems use `ceil(sqrt(gamma N_X))` per axis.
pub fn build_nodes(
    pde: ProblemKind,
    n_x_axis: usize,
    gamma: f64,
    transform: &TransformKind,
    cloud: &CloudConfig,
    seed: u64,
) -> Result<CaseNodes> {
    let x = tensor_grid(n_x_axis, 2)?;
    let h_x = fill_distance(&x, DEFAULT_PROBE_N)?;
    let per_axis = match pde {
        ProblemKind::Pde4 => {
            if !(gamma >= 1.0) {
                return Err(invalid(format!("oversampling ratio must be >= 1, got {gamma}")));
            }
            (gamma * n_x_axis as f64 - 1e-9).ceil() as usize + 1
        }
        _ => oversample_per_axis(gamma, x.len())?,
    };
    let pre = tensor_grid(per_axis, 2)?;
    let (y_pre, z_pre) = boundary_subset(&pre);
    let y = apply_transform(transform, &y_pre)?;
    let z = apply_transform(transform, &z_pre)?;
    if pde != ProblemKind::Pde4 || cloud.points == 0 {
        return Ok(CaseNodes { x, y, z, y_pre, z_pre, h_x });
    }
    let scattered = scattered_cloud_near_line(cloud.points, &cloud.normal, cloud.width, seed)?;
    let y = y.union(&scattered)?.dedup();
    // Weights only see the counts for scattered nodes.
    let y_pre = y.clone();
    Ok(CaseNodes { x, y, z, y_pre, z_pre, h_x })
}

/// Solved expansion of one sweep cell.
#[derive(Clone, Debug)]
pub struct CaseSolution {
    pub spec: MaternSpec,
    pub nodes: CaseNodes,
    pub coeffs: DVector<f64>,
    pub kappa_w: f64,
    pub cond_normal: Option<f64>,
    pub truncated: bool,
    pub rank: usize,
    pub stationarity: f64,
}

impl CaseSolution {
    pub fn evaluate(&self, at: &PointSet) -> Vec<f64> {
        evaluate_expansion(&self.spec, &self.nodes.x, &self.coeffs, at)
    }
}

/// Parameters of a single solve.
#[derive(Clone, Debug)]
pub struct CaseParams {
    pub method: Method,
    pub tau: u32,
    pub eps: f64,
    pub gamma: f64,
    pub n_x_axis: usize,
    pub transform: TransformKind,
    pub seed: u64,
    pub log_cond: bool,
    pub cloud: CloudConfig,
}

impl CaseParams {
    pub fn from_config(cfg: &RunConfig, method: Method, tau: u32, gamma: f64, n_x_axis: usize) -> Self {
        Self {
            method,
            tau,
            eps: cfg.eps,
            gamma,
            n_x_axis,
            transform: cfg.transform.clone(),
            seed: cfg.seed,
            log_cond: cfg.log_cond,
            cloud: cfg.cloud.clone(),
        }
    }
}

pub fn solve_case(prob: &EllipticProblem, pde: ProblemKind, p: &CaseParams) -> Result<CaseSolution> {
    let nodes = build_nodes(pde, p.n_x_axis, p.gamma, &p.transform, &p.cloud, p.seed)?;
    let spec = MaternSpec::new(p.tau, 2, p.eps)?;
    let theta = theta_default(nodes.h_x)?;
    let sys = assemble_system(prob, &spec, &nodes.x, &nodes.y, &nodes.z, theta)?;
    let w = build_weights(p.method.scheme(p.seed), &nodes.y_pre, &nodes.z_pre, &p.transform)?;
    let sys = weight_and_scale(sys, &w)?;
    let sol = solve_lstsq(&sys.design, &sys.rhs)?;
    let residual = &sys.rhs - &sys.design * &sol.coeffs;
    let grad = sys.design.tr_mul(&residual).norm();
    let scale = sys.design.tr_mul(&sys.rhs).norm();
    let stationarity = if scale > 0.0 { grad / scale } else { grad };
    let cond_normal = if p.log_cond { Some(cond2_normal(&sys.design)?) } else { None };
    Ok(CaseSolution {
        kappa_w: sys.kappa_w(),
        spec,
        nodes,
        coeffs: sol.coeffs,
        cond_normal,
        truncated: sol.truncated,
        rank: sol.rank_estimate,
        stationarity,
    })
}

/// Values the error is measured against on the evaluation lattice.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub grid: PointSet,
    pub reference: Vec<f64>,
}

impl Evaluation {
    /// Exact values for problems with a closed-form solution, the bilinearly
    /// interpolated finite-difference reference otherwise.
    pub fn for_problem(prob: &EllipticProblem, pde: ProblemKind, grid_n: usize, reference_n: usize) -> Result<Self> {
        let grid = tensor_grid(grid_n, 2)?;
        let reference = match (&prob.exact, pde) {
            (Some(exact), _) => grid.iter().map(|p| (exact.u)(p)).collect(),
            (None, ProblemKind::Pde4) => {
                let fd = fd_reference_pde4(reference_n)?;
                grid.iter().map(|p| fd.interpolate(p)).collect()
            }
            (None, _) => return Err(Error::MissingExactSolution(prob.name.clone())),
        };
        Ok(Self { grid, reference })
    }
}

/// `||u_num - u_ref||_2 / ||u_ref||_2`.
pub fn relative_l2(u_num: &[f64], u_ref: &[f64]) -> Result<f64> {
    if u_num.len() != u_ref.len() {
        return Err(Error::DimensionMismatch(format!("{} values against {}", u_num.len(), u_ref.len())));
    }
    let den = u_ref.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(den > 0.0) {
        return Err(invalid("reference has zero norm"));
    }
    let num = u_num.iter().zip(u_ref).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(num / den)
}

/// Solves one cell and measures it. Failures end up in the record.
pub fn run_case(
    prob: &EllipticProblem,
    pde: ProblemKind,
    params: &CaseParams,
    eval: &Evaluation,
    record_timing: bool,
) -> ConvergenceRecord {
    let start = Instant::now();
    let outcome = solve_case(prob, pde, params).and_then(|sol| {
        let err = relative_l2(&sol.evaluate(&eval.grid), &eval.reference)?;
        Ok((sol, err))
    });
    let wall_ms = if record_timing { start.elapsed().as_millis() as u64 } else { 0 };
    let mut rec = ConvergenceRecord {
        method: params.method,
        pde: pde.name(),
        tau: params.tau,
        eps: params.eps,
        gamma: params.gamma,
        n_x: params.n_x_axis * params.n_x_axis,
        n_y: 0,
        n_z: 0,
        h_x: f64::NAN,
        rel_l2: f64::NAN,
        cond_logged: None,
        kappa_w: None,
        truncated: false,
        seed: params.seed,
        wall_ms,
        stationarity: f64::NAN,
        error: None,
    };
    match outcome {
        Ok((sol, err)) => {
            rec.n_y = sol.nodes.y.len();
            rec.n_z = sol.nodes.z.len();
            rec.h_x = sol.nodes.h_x;
            rec.rel_l2 = err;
            rec.cond_logged = sol.cond_normal;
            rec.kappa_w = Some(sol.kappa_w);
            rec.truncated = sol.truncated;
            rec.stationarity = sol.stationarity;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Every `(method, tau, gamma, n_x)` cell, in that nesting order.
pub fn run_convergence(cfg: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    let prob = make_problem(cfg.pde)?;
    let eval = Evaluation::for_problem(&prob, cfg.pde, cfg.eval_grid_n, cfg.reference_n)?;
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for &tau in &cfg.tau_list {
            for &gamma in &cfg.gamma_list {
                for &n in &cfg.nx_axis_list {
                    let params = CaseParams::from_config(cfg, method, tau, gamma, n);
                    out.push(run_case(&prob, cfg.pde, &params, &eval, cfg.record_timing));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Records dropped as truncated, failed or below the round-off floor.
    pub excluded: usize,
}

impl RateFit {
    /// More than half of the records were excluded.
    pub fn flagged(&self) -> bool {
        self.excluded > self.points_used
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} ordinates", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("log-log fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if n < 2 || !(sxx > 1e-24) {
        return Err(Error::InsufficientData(n));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared, points_used: n, excluded: 0 })
}

/// Slope of `ln rel_l2` against `ln h_X` over the usable records.
pub fn fit_rate(records: &[ConvergenceRecord]) -> Result<RateFit> {
    let usable: Vec<&ConvergenceRecord> = records
        .iter()
        .filter(|r| r.is_ok() && !r.truncated && r.rel_l2.is_finite() && r.rel_l2 >= ROUNDOFF_FLOOR)
        .collect();
    let xs: Vec<f64> = usable.iter().map(|r| r.h_x).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.rel_l2).collect();
    let mut fit = fit_loglog(&xs, &ys)?;
    fit.excluded = records.len() - usable.len();
    Ok(fit)
}

/// Rate fits per `(method, pde, tau, gamma)` group, in record order.
pub fn fit_groups(records: &[ConvergenceRecord]) -> Vec<(GroupKey, Result<RateFit>)> {
    let mut keys: Vec<GroupKey> = Vec::new();
    for r in records {
        let k = GroupKey::of(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<ConvergenceRecord> = records.iter().filter(|r| GroupKey::of(r) == k).cloned().collect();
            (k, fit_rate(&group))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupKey {
    pub method: Method,
    pub pde: String,
    pub tau: u32,
    pub gamma: f64,
}

impl GroupKey {
    pub fn of(r: &ConvergenceRecord) -> Self {
        Self { method: r.method, pde: r.pde.clone(), tau: r.tau, gamma: r.gamma }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relative_l2_examples() {
        assert_eq!(relative_l2(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let r: Vec<f64> = vec![3.0, -4.0];
        let n: Vec<f64> = r.iter().map(|v| 1.01 * v).collect();
        assert!((relative_l2(&n, &r).unwrap() - 0.01).abs() < 1e-14);
        assert_eq!(relative_l2(&[1.0, 2.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert!(relative_l2(&[1.0], &[0.0]).is_err());
        assert!(relative_l2(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn rec(h: f64, e: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            method: Method::WlsId,
            pde: "pde1".into(),
            tau: 4,
            eps: 5.0,
            gamma: 3.0,
            n_x: 81,
            n_y: 0,
            n_z: 0,
            h_x: h,
            rel_l2: e,
            cond_logged: None,
            kappa_w: Some(1.0),
            truncated: false,
            seed: 1,
            wall_ms: 0,
            stationarity: 0.0,
            error: None,
        }
    }

    #[test]
    fn fit_rate_examples() {
        let f = fit_rate(&[rec(1e-1, 1e-2), rec(1e-2, 1e-4)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        let f = fit_rate(&[rec(0.1, 1e-3), rec(0.2, 8e-3), rec(0.4, 6.4e-2)]).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<_> = (0..8)
            .map(|k| {
                let h = 0.3 * 0.8f64.powi(k);
                rec(h, 2.0 * h.powi(3) * (1.0 + rng.random_range(-0.05..0.05)))
            })
            .collect();
        assert!((fit_rate(&data).unwrap().slope - 3.0).abs() < 0.2);
    }

    #[test]
    fn fit_rate_exclusions() {
        let mut t = rec(0.05, 1e-3);
        t.truncated = true;
        let f = fit_rate(&[rec(0.1, 1e-2), rec(0.2, 4e-2), t, rec(0.01, 1e-13)]).unwrap();
        assert_eq!((f.points_used, f.excluded), (2, 2));
        assert!(!f.flagged());
        assert!(matches!(fit_rate(&[rec(0.1, 1e-2)]), Err(Error::InsufficientData(1))));
        assert!(fit_rate(&[rec(0.1, 1e-2), rec(0.1, 1e-3)]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert_eq!(Method::parse_many("all").unwrap().len(), 3);
        assert_eq!(Method::parse_many("wls-id,rd").unwrap(), vec![Method::WlsId, Method::WlsRd]);
        assert!(Method::parse("ls").is_err());
    }

    #[test]
    fn node_counts_follow_generation_rules() {
        let cloud = CloudConfig::default();
        let n = build_nodes(ProblemKind::Pde1, 9, 3.0, &TransformKind::Identity, &cloud, 1).unwrap();
        // ceil(sqrt(3 * 81)) = 16 per axis.
        assert_eq!((n.x.len(), n.y.len(), n.z.len()), (81, 256, 60));
        let tiny = CloudConfig { points: 50, ..cloud };
        let n4 = build_nodes(ProblemKind::Pde4, 41, 2.5, &TransformKind::Identity, &tiny, 1).unwrap();
        assert_eq!(n4.z.len(), 412);
        assert_eq!(n4.y.len(), 104 * 104 + 50);
    }

    #[test]
    fn small_case_solves_and_is_stationary() {
        let prob = make_problem(ProblemKind::Pde1).unwrap();
        let eval = Evaluation::for_problem(&prob, ProblemKind::Pde1, 21, 0).unwrap();
        let cfg = RunConfig::default();
        let mut errs = Vec::new();
        for m in Method::ALL {
            let rec = run_case(&prob, ProblemKind::Pde1, &CaseParams::from_config(&cfg, m, 4, 3.0, 9), &eval, false);
            assert!(rec.is_ok(), "{:?}", rec.error);
            assert!(rec.stationarity < 1e-6, "{}", rec.stationarity);
            assert!(rec.rel_l2 < 0.5);
            errs.push(rec.rel_l2);
        }
        let (lo, hi) = errs.iter().fold((f64::MAX, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
        assert!(hi / lo <= 5.0, "{errs:?}");
    }

    #[test]
    fn failures_are_recorded() {
        let prob = make_problem(ProblemKind::Pde1).unwrap();
        let eval = Evaluation::for_problem(&prob, ProblemKind::Pde1, 11, 0).unwrap();
        let cfg = RunConfig::default();
        // nu = tau - 1 = 1 is too rough for second derivatives.
        let rec = run_case(&prob, ProblemKind::Pde1, &CaseParams::from_config(&cfg, Method::WlsId, 2, 2.0, 5), &eval, false);
        assert!(rec.error.is_some() && rec.rel_l2.is_nan());
    }
}
