//! Second-order elliptic operators and the benchmark Dirichlet problems.
//!
//! Operators follow the convention `L u = sum a_ij u_ij - sum b_i u_i - c u`.
//! All benchmark problems live on `[-1, 1]^2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Point, MAX_DIM};
use crate::kernels::KernelJet;

pub type Matrix3 = [[f64; MAX_DIM]; MAX_DIM];
pub type Vector3 = [f64; MAX_DIM];

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point) -> Vector3 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Point) -> Matrix3 + Send + Sync>;

/// Operator coefficients frozen at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub dim: usize,
    pub a: Matrix3,
    pub b: Vector3,
    pub c: f64,
}

impl Coefficients {
    /// `sum a_ij H_ij - b . g - c v`.
    #[inline]
    pub fn apply_parts(&self, value: f64, grad: &Vector3, hess: &Matrix3) -> f64 {
        let mut acc = -self.c * value;
        for i in 0..self.dim {
            acc -= self.b[i] * grad[i];
            for j in 0..self.dim {
                acc += self.a[i][j] * hess[i][j];
            }
        }
        acc
    }

    #[inline]
    pub fn apply(&self, jet: &KernelJet) -> f64 {
        self.apply_parts(jet.value, &jet.gradient, &jet.hessian)
    }
}

/// A linear second-order operator given by coefficient callbacks.
#[derive(Clone)]
pub struct EllipticOperator {
    pub dim: usize,
    pub a: MatrixFn,
    pub b: VectorFn,
    pub c: ScalarFn,
}

impl EllipticOperator {
    /// `Delta u - u`.
    pub fn modified_helmholtz(dim: usize) -> Self {
        Self::constant(dim, identity(dim), [0.0; MAX_DIM], 1.0)
    }

    /// `L u = u`, useful for interpolation-style tests.
    pub fn identity_map(dim: usize) -> Self {
        Self::constant(dim, [[0.0; MAX_DIM]; MAX_DIM], [0.0; MAX_DIM], -1.0)
    }

    pub fn constant(dim: usize, a: Matrix3, b: Vector3, c: f64) -> Self {
        Self { dim, a: Arc::new(move |_| a), b: Arc::new(move |_| b), c: Arc::new(move |_| c) }
    }

    /// `div(k grad u) = k Delta u + grad k . grad u` for a scalar field `k`.
    pub fn divergence_form(dim: usize, k: ScalarFn, grad_k: VectorFn) -> Self {
        Self {
            dim,
            a: Arc::new(move |p| {
                let kv = k(p);
                let mut a = identity(dim);
                for row in a.iter_mut().take(dim) {
                    for v in row.iter_mut().take(dim) {
                        *v *= kv;
                    }
                }
                a
            }),
            b: Arc::new(move |p| {
                let mut g = grad_k(p);
                for v in g.iter_mut() {
                    *v = -*v;
                }
                g
            }),
            c: Arc::new(|_| 0.0),
        }
    }

    #[inline]
    pub fn coefficients(&self, x: &Point) -> Coefficients {
        Coefficients { dim: self.dim, a: (self.a)(x), b: (self.b)(x), c: (self.c)(x) }
    }
}

impl fmt::Debug for EllipticOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticOperator").field("dim", &self.dim).finish_non_exhaustive()
    }
}

/// A smooth exact solution with analytic first and second derivatives.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub hess_u: MatrixFn,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExactSolution { .. }")
    }
}

/// `L u = f` in the box, `u = g` on its boundary.
#[derive(Clone)]
pub struct EllipticProblem {
    pub name: String,
    pub op: EllipticOperator,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for EllipticProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticProblem")
            .field("name", &self.name)
            .field("op", &self.op)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl EllipticProblem {
    pub fn dim(&self) -> usize {
        self.op.dim
    }
}

/// The benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind {
    /// `Delta u - u = f` with a sum of two sech ridges.
    Pde1,
    /// Negative variable diffusion with `u = (1 - x^2) cos(pi y / 2)`.
    Pde2,
    /// `Delta u - u = f` with a Gaussian bump at `center`.
    Pde3 { center: [f64; 2] },
    /// `div(c grad u) = 1`, `u = 0` on the boundary; no closed-form solution.
    Pde4,
}

impl ProblemKind {
    pub const PDE3_CENTERED: Self = Self::Pde3 { center: [0.0, 0.0] };
    pub const PDE3_SHIFTED: Self = Self::Pde3 { center: [0.5, 0.75] };

    /// Accepts `1`..`4`, optionally prefixed by `pde`, and `3@x,y` for a
    /// Gaussian centre.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("pde").unwrap_or(&t);
        let (head, center) = match t.split_once('@') {
            Some((h, c)) => (h, Some(c)),
            None => (t, None),
        };
        let kind = match head {
            "1" => Self::Pde1,
            "2" => Self::Pde2,
            "3" => {
                let center = match center {
                    None => [0.0, 0.0],
                    Some(c) => {
                        let v: Vec<f64> = c
                            .split(',')
                            .map(|x| x.trim().parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| Error::InvalidArgument(format!("bad centre `{c}`")))?;
                        if v.len() != 2 {
                            return Err(Error::InvalidArgument(format!("centre needs two coordinates, got `{c}`")));
                        }
                        [v[0], v[1]]
                    }
                };
                Self::Pde3 { center }
            }
            "4" => Self::Pde4,
            _ => return Err(Error::InvalidArgument(format!("unknown problem `{s}`"))),
        };
        if center.is_some() && !matches!(kind, Self::Pde3 { .. }) {
            return Err(Error::InvalidArgument(format!("only problem 3 takes a centre, got `{s}`")));
        }
        Ok(kind)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Pde1 => "pde1".into(),
            Self::Pde2 => "pde2".into(),
            Self::Pde3 { center } if *center == [0.0, 0.0] => "pde3".into(),
            Self::Pde3 { center } => format!("pde3@{},{}", center[0], center[1]),
            Self::Pde4 => "pde4".into(),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn identity(dim: usize) -> Matrix3 {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (k, row) in m.iter_mut().enumerate().take(dim) {
        row[k] = 1.0;
    }
    m
}

/// Diffusion coefficient of problems 2 and 4, valued in `(-5 pi / 4, -pi / 4)`.
pub fn diffusion_c(p: &Point) -> f64 {
    -(100.0 * (p[0] + p[1])).atan() - 0.75 * PI
}

pub fn diffusion_grad_c(p: &Point) -> Vector3 {
    let s = 100.0 * (p[0] + p[1]);
    let d = -100.0 / (1.0 + s * s);
    [d, d, 0.0]
}

fn sech(t: f64) -> f64 {
    1.0 / t.cosh()
}

fn pde1_exact() -> ExactSolution {
    // d/dt sech = -sech tanh, d2/dt2 sech = sech (tanh^2 - sech^2).
    let shifts = [0.5, 0.75];
    ExactSolution {
        u: Arc::new(move |p| sech(PI * (p[0] - shifts[0])) + sech(PI * (p[1] - shifts[1]))),
        grad_u: Arc::new(move |p| {
            let mut g = [0.0; MAX_DIM];
            for k in 0..2 {
                let t = PI * (p[k] - shifts[k]);
                g[k] = -PI * sech(t) * t.tanh();
            }
            g
        }),
        hess_u: Arc::new(move |p| {
            let mut h = [[0.0; MAX_DIM]; MAX_DIM];
            for k in 0..2 {
                let t = PI * (p[k] - shifts[k]);
                let (s, th) = (sech(t), t.tanh());
                h[k][k] = PI * PI * s * (th * th - s * s);
            }
            h
        }),
    }
}

fn pde2_exact() -> ExactSolution {
    let k = 0.5 * PI;
    ExactSolution {
        u: Arc::new(move |p| (1.0 - p[0] * p[0]) * (k * p[1]).cos()),
        grad_u: Arc::new(move |p| {
            let (x, y) = (p[0], p[1]);
            [-2.0 * x * (k * y).cos(), -(1.0 - x * x) * k * (k * y).sin(), 0.0]
        }),
        hess_u: Arc::new(move |p| {
            let (x, y) = (p[0], p[1]);
            let (c, s) = ((k * y).cos(), (k * y).sin());
            let mut h = [[0.0; MAX_DIM]; MAX_DIM];
            h[0][0] = -2.0 * c;
            h[1][1] = -(1.0 - x * x) * k * k * c;
            h[0][1] = 2.0 * x * k * s;
            h[1][0] = h[0][1];
            h
        }),
    }
}

fn pde3_exact(center: [f64; 2]) -> ExactSolution {
    let gauss = move |p: &Point| {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        ((-10.0 * (dx * dx + dy * dy)).exp(), [dx, dy])
    };
    ExactSolution {
        u: Arc::new(move |p| gauss(p).0),
        grad_u: Arc::new(move |p| {
            let (u, d) = gauss(p);
            [-20.0 * d[0] * u, -20.0 * d[1] * u, 0.0]
        }),
        hess_u: Arc::new(move |p| {
            let (u, d) = gauss(p);
            let mut h = [[0.0; MAX_DIM]; MAX_DIM];
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { -20.0 } else { 0.0 };
                    h[i][j] = (id + 400.0 * d[i] * d[j]) * u;
                }
            }
            h
        }),
    }
}

/// `L u*` from the analytic jet of `u*`.
fn source_from_exact(op: &EllipticOperator, exact: &ExactSolution, x: &Point) -> f64 {
    op.coefficients(x).apply_parts((exact.u)(x), &(exact.grad_u)(x), &(exact.hess_u)(x))
}

fn with_exact(name: String, op: EllipticOperator, exact: ExactSolution) -> EllipticProblem {
    let (op_f, ex_f) = (op.clone(), exact.clone());
    let g = exact.u.clone();
    EllipticProblem {
        name,
        op,
        f: Arc::new(move |x| source_from_exact(&op_f, &ex_f, x)),
        g,
        exact: Some(exact),
    }
}

fn diffusion_operator() -> EllipticOperator {
    EllipticOperator::divergence_form(2, Arc::new(diffusion_c), Arc::new(diffusion_grad_c))
}

pub fn make_problem(which: ProblemKind) -> Result<EllipticProblem> {
    let name = which.name();
    Ok(match which {
        ProblemKind::Pde1 => with_exact(name, EllipticOperator::modified_helmholtz(2), pde1_exact()),
        ProblemKind::Pde2 => with_exact(name, diffusion_operator(), pde2_exact()),
        ProblemKind::Pde3 { center } => {
            if center.iter().any(|c| !c.is_finite() || c.abs() > 1.0) {
                return Err(Error::OutOfBox { value: center[0].abs().max(center[1].abs()) });
            }
            with_exact(name, EllipticOperator::modified_helmholtz(2), pde3_exact(center))
        }
        ProblemKind::Pde4 => EllipticProblem {
            name,
            op: diffusion_operator(),
            f: Arc::new(|_| 1.0),
            g: Arc::new(|_| 0.0),
            exact: None,
        },
    })
}

/// `L u*` at `x` for a problem with a known solution.
pub fn manufactured_source(prob: &EllipticProblem, x: &Point) -> Result<f64> {
    let exact = prob.exact.as_ref().ok_or_else(|| Error::MissingExactSolution(prob.name.clone()))?;
    Ok(source_from_exact(&prob.op, exact, x))
}
