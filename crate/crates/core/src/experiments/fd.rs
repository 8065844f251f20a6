//! Finite-difference reference solutions of `div(c grad u) = f` on the square
//! with homogeneous Dirichlet data.
//!
//! The five-point scheme uses the arithmetic mean of the nodal coefficients at
//! each cell face. With `k = |c|` the discrete operator `-div(k grad)` is
//! symmetric positive definite, so the system is solved by preconditioned
//! conjugate gradients: a geometric multigrid V-cycle when `n = 2^m + 1`, a
//! Jacobi preconditioner otherwise.

use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::geometry::{grid_axis, Point};
use crate::pde::diffusion_c;

/// Relative residual `||b - A u|| / ||b||` at which CG stops.
pub const FD_TOLERANCE: f64 = 1e-10;

const MAX_MG_ITERATIONS: usize = 200;
const MAX_JACOBI_ITERATIONS: usize = 50_000;

/// Nodal solution on the `n x n` grid with `values[i * n + j] = u(x_i, y_j)`.
#[derive(Clone, Debug)]
pub struct GridSolution {
    pub n: usize,
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl GridSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Bilinear interpolation; points outside the box are clamped onto it.
    pub fn interpolate(&self, p: &Point) -> f64 {
        let n = self.n;
        let h = 2.0 / (n - 1) as f64;
        let locate = |t: f64| {
            let s = (t.clamp(-1.0, 1.0) + 1.0) / h;
            let i = (s.floor() as usize).min(n - 2);
            (i, s - i as f64)
        };
        let (i, a) = locate(p[0]);
        let (j, b) = locate(p[1]);
        (1.0 - a) * ((1.0 - b) * self.at(i, j) + b * self.at(i, j + 1))
            + a * ((1.0 - b) * self.at(i + 1, j) + b * self.at(i + 1, j + 1))
    }

    /// Writes `x,y,u` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut out = std::io::BufWriter::new(file);
        writeln!(out, "x,y,u").map_err(io)?;
        for i in 0..self.n {
            for j in 0..self.n {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", self.axis[i], self.axis[j], self.at(i, j)).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }
}

/// One grid level: `n x n` nodes including the boundary, face coefficients
/// already divided by `h^2`.
struct Level {
    n: usize,
    /// Face between `(i, j)` and `(i + 1, j)`.
    east: Vec<f64>,
    /// Face between `(i, j)` and `(i, j + 1)`.
    north: Vec<f64>,
    diag: Vec<f64>,
}

impl Level {
    fn new(n: usize, k: &dyn Fn(&Point) -> f64) -> Self {
        let axis = grid_axis(n);
        let h2 = (2.0 / (n - 1) as f64).powi(2);
        let mut nodal = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                nodal[i * n + j] = k(&Point::new2(axis[i], axis[j]));
            }
        }
        let mut east = vec![0.0; n * n];
        let mut north = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    east[i * n + j] = 0.5 * (nodal[i * n + j] + nodal[(i + 1) * n + j]) / h2;
                }
                if j + 1 < n {
                    north[i * n + j] = 0.5 * (nodal[i * n + j] + nodal[i * n + j + 1]) / h2;
                }
            }
        }
        let mut diag = vec![0.0; n * n];
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                diag[i * n + j] =
                    east[i * n + j] + east[(i - 1) * n + j] + north[i * n + j] + north[i * n + j - 1];
            }
        }
        Self { n, east, north, diag }
    }

    /// Off-diagonal part of row `(i, j)` applied to `u`, i.e. `sum k_f u_nb`.
    #[inline]
    fn neighbours(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let n = self.n;
        let c = i * n + j;
        self.east[c] * u[c + n] + self.east[c - n] * u[c - n] + self.north[c] * u[c + 1] + self.north[c - 1] * u[c - 1]
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let c = i * n + j;
                out[c] = self.diag[c] * u[c] - self.neighbours(u, i, j);
            }
        }
    }

    fn gauss_seidel(&self, u: &mut [f64], b: &[f64], forward: bool) {
        let n = self.n;
        let mut sweep = |i: usize, j: usize| {
            let c = i * n + j;
            u[c] = (b[c] + self.neighbours(u, i, j)) / self.diag[c];
        };
        if forward {
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    sweep(i, j);
                }
            }
        } else {
            for i in (1..n - 1).rev() {
                for j in (1..n - 1).rev() {
                    sweep(i, j);
                }
            }
        }
    }
}

/// Full-weighting restriction onto the grid with `(n + 1) / 2` nodes per axis.
fn restrict(fine: &[f64], n: usize) -> Vec<f64> {
    let nc = n.div_ceil(2);
    let mut coarse = vec![0.0; nc * nc];
    for ic in 1..nc - 1 {
        for jc in 1..nc - 1 {
            let (i, j) = (2 * ic, 2 * jc);
            let at = |a: usize, b: usize| fine[a * n + b];
            coarse[ic * nc + jc] = (4.0 * at(i, j)
                + 2.0 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1))
                + at(i - 1, j - 1)
                + at(i - 1, j + 1)
                + at(i + 1, j - 1)
                + at(i + 1, j + 1))
                / 16.0;
        }
    }
    coarse
}

/// Bilinear prolongation added onto `fine`.
fn prolong_add(coarse: &[f64], nc: usize, fine: &mut [f64]) {
    let n = 2 * nc - 1;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let (ic, jc) = (i / 2, j / 2);
            let at = |a: usize, b: usize| coarse[a * nc + b];
            fine[i * n + j] += match (i % 2, j % 2) {
                (0, 0) => at(ic, jc),
                (1, 0) => 0.5 * (at(ic, jc) + at(ic + 1, jc)),
                (0, 1) => 0.5 * (at(ic, jc) + at(ic, jc + 1)),
                _ => 0.25 * (at(ic, jc) + at(ic + 1, jc) + at(ic, jc + 1) + at(ic + 1, jc + 1)),
            };
        }
    }
}

/// Symmetric V(2, 2) cycle: forward Gauss-Seidel before, backward after.
fn v_cycle(levels: &[Level], depth: usize, b: &[f64]) -> Vec<f64> {
    let lv = &levels[depth];
    let n = lv.n;
    let mut u = vec![0.0; n * n];
    if depth + 1 == levels.len() {
        // At most a handful of unknowns: iterate to convergence.
        for _ in 0..50 {
            lv.gauss_seidel(&mut u, b, true);
            lv.gauss_seidel(&mut u, b, false);
        }
        return u;
    }
    for _ in 0..2 {
        lv.gauss_seidel(&mut u, b, true);
    }
    let mut au = vec![0.0; n * n];
    lv.apply(&u, &mut au);
    let r: Vec<f64> = b.iter().zip(&au).map(|(b, a)| b - a).collect();
    let rc = restrict(&r, n);
    let ec = v_cycle(levels, depth + 1, &rc);
    prolong_add(&ec, levels[depth + 1].n, &mut u);
    for _ in 0..2 {
        lv.gauss_seidel(&mut u, b, false);
    }
    u
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `div(c grad u) = f` with `u = 0` on the boundary. `c` must keep one
/// sign on the closed box.
pub fn fd_solve_divergence(
    n: usize,
    c: impl Fn(&Point) -> f64,
    f: impl Fn(&Point) -> f64,
) -> Result<GridSolution> {
    if n < 3 {
        return Err(invalid(format!("finite-difference grid needs n >= 3, got {n}")));
    }
    let axis = grid_axis(n);
    let sign = c(&Point::new2(0.0, 0.0)).signum();
    if sign == 0.0 {
        return Err(invalid("diffusion coefficient vanishes"));
    }
    for &x in &axis {
        for &y in &axis {
            let v = c(&Point::new2(x, y));
            if !(v * sign > 0.0) || !v.is_finite() {
                return Err(invalid(format!("diffusion coefficient changes sign or is not finite: {v} at ({x}, {y})")));
            }
        }
    }
    // div(c grad u) = f  <=>  -div(k grad u) = -sign f  with k = |c|.
    let k = |p: &Point| sign * c(p);
    let mut b = vec![0.0; n * n];
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            b[i * n + j] = -sign * f(&Point::new2(axis[i], axis[j]));
        }
    }

    let multigrid = n >= 5 && (n - 1).is_power_of_two();
    let mut levels = vec![Level::new(n, &k)];
    if multigrid {
        while levels.last().unwrap().n > 5 {
            let m = levels.last().unwrap().n.div_ceil(2);
            levels.push(Level::new(m, &k));
        }
    }
    let precondition = |r: &[f64]| -> Vec<f64> {
        if multigrid {
            v_cycle(&levels, 0, r)
        } else {
            r.iter().zip(&levels[0].diag).map(|(r, d)| if *d > 0.0 { r / d } else { 0.0 }).collect()
        }
    };
    let max_iter = if multigrid { MAX_MG_ITERATIONS } else { MAX_JACOBI_ITERATIONS };

    let b_norm = dot(&b, &b).sqrt();
    let mut u = vec![0.0; n * n];
    if b_norm == 0.0 {
        return Ok(GridSolution { n, axis, values: u, iterations: 0, relative_residual: 0.0 });
    }
    let mut r = b.clone();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n * n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        levels[0].apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for idx in 0..n * n {
            u[idx] += alpha * p[idx];
            r[idx] -= alpha * ap[idx];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= FD_TOLERANCE {
            return Ok(GridSolution { n, axis, values: u, iterations: it, relative_residual: rel });
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for idx in 0..n * n {
            p[idx] = z[idx] + beta * p[idx];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: rel })
}

/// Reference for problem 4: `div(c grad u) = 1`, `u = 0` on the boundary.
pub fn fd_reference_pde4(n: usize) -> Result<GridSolution> {
    fd_solve_divergence(n, diffusion_c, |_| 1.0)
}
