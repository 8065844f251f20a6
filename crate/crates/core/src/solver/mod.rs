//! Dense least squares, condition numbers and extreme eigenvalues of
//! symmetric-definite pencils.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Columns whose remaining norm drops below this fraction of the first pivot
/// are dropped from the solve.
pub const TRUNCATION_RATIO: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct LstsqResult {
    pub coeffs: DVector<f64>,
    /// `|| A alpha - b ||_2`.
    pub residual_norm: f64,
    pub rank_estimate: usize,
    /// True when some columns were dropped.
    pub truncated: bool,
}

/// Householder QR with column pivoting, stored in place.
///
/// Column `k` below the diagonal holds the reflector `v_k` with `v_k[0]`
/// kept separately in `head`; `R` sits on and above the diagonal.
struct PivotedQr {
    m: usize,
    n: usize,
    a: Vec<f64>,
    head: Vec<f64>,
    beta: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn factor(design: &DMatrix<f64>, ratio: f64) -> Self {
        let (m, n) = design.shape();
        let mut a = design.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut head = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let col_norm2 = |a: &[f64], j: usize, from: usize| a[j * m + from..(j + 1) * m].iter().map(|v| v * v).sum::<f64>();
        let mut norms: Vec<f64> = (0..n).map(|j| col_norm2(&a, j, 0)).collect();
        let mut exact = norms.clone();
        let steps = m.min(n);
        let mut first = 0.0;
        let mut rank = steps;
        for k in 0..steps {
            let (p, _) = norms[k..]
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
            let p = p + k;
            if p != k {
                for i in 0..m {
                    a.swap(k * m + i, p * m + i);
                }
                norms.swap(k, p);
                exact.swap(k, p);
                perm.swap(k, p);
            }
            let norm = col_norm2(&a, k, k).sqrt();
            if k == 0 {
                first = norm;
            }
            if norm == 0.0 || norm < ratio * first {
                rank = k;
                break;
            }
            let col = &mut a[k * m + k..(k + 1) * m];
            let alpha = if col[0] >= 0.0 { -norm } else { norm };
            let v0 = col[0] - alpha;
            // Reflector H = I - beta v v^T with v = (v0, col[1..]).
            let vnorm2 = v0 * v0 + col[1..].iter().map(|v| v * v).sum::<f64>();
            let b = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            head[k] = v0;
            beta[k] = b;
            col[0] = alpha;
            let (left, right) = a.split_at_mut((k + 1) * m);
            let v_tail = &left[k * m + k + 1..(k + 1) * m];
            for j in 0..n - k - 1 {
                let cj = &mut right[j * m + k..(j + 1) * m];
                let dot = v0 * cj[0] + v_tail.iter().zip(&cj[1..]).map(|(x, y)| x * y).sum::<f64>();
                let s = b * dot;
                cj[0] -= s * v0;
                for (c, v) in cj[1..].iter_mut().zip(v_tail) {
                    *c -= s * v;
                }
                // Norm downdate, recomputed when cancellation makes it unreliable.
                let jj = k + 1 + j;
                let rkj = cj[0];
                norms[jj] -= rkj * rkj;
                if norms[jj] <= 1e-10 * exact[jj] {
                    norms[jj] = cj[1..].iter().map(|v| v * v).sum();
                    exact[jj] = norms[jj];
                }
            }
        }
        Self { m, n, a, head, beta, perm, rank }
    }

    /// `Q^T b` in place.
    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.m;
        for k in 0..self.rank {
            let v0 = self.head[k];
            let v_tail = &self.a[k * m + k + 1..(k + 1) * m];
            let seg = &mut b[k..];
            let dot = v0 * seg[0] + v_tail.iter().zip(&seg[1..]).map(|(x, y)| x * y).sum::<f64>();
            let s = self.beta[k] * dot;
            seg[0] -= s * v0;
            for (c, v) in seg[1..].iter_mut().zip(v_tail) {
                *c -= s * v;
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.m + i]
    }

    fn solve(&self, rhs: &DVector<f64>) -> (DVector<f64>, f64) {
        let mut qtb = rhs.as_slice().to_vec();
        self.apply_qt(&mut qtb);
        let r = self.rank;
        let residual = qtb[r..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut y = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = qtb[i];
            for j in i + 1..r {
                s -= self.r(i, j) * y[j];
            }
            y[i] = s / self.r(i, i);
        }
        let mut coeffs = DVector::zeros(self.n);
        for (i, yi) in y.into_iter().enumerate() {
            coeffs[self.perm[i]] = yi;
        }
        (coeffs, residual)
    }
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Minimises `|| A alpha - b ||_2` by pivoted Householder QR, dropping
/// columns whose pivot falls below [`TRUNCATION_RATIO`] of the first.
pub fn solve_lstsq(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<LstsqResult> {
    let (m, n) = design.shape();
    if n == 0 {
        return Err(invalid("least squares needs at least one column"));
    }
    if m < n {
        return Err(invalid(format!("underdetermined system: {m} rows, {n} columns")));
    }
    if rhs.len() != m {
        return Err(Error::DimensionMismatch(format!("{m} rows but rhs of length {}", rhs.len())));
    }
    check_finite(design, "design matrix")?;
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let qr = PivotedQr::factor(design, TRUNCATION_RATIO);
    let (coeffs, residual_norm) = qr.solve(rhs);
    Ok(LstsqResult { coeffs, residual_norm, rank_estimate: qr.rank, truncated: qr.rank < n })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Err(invalid("empty matrix"));
    }
    check_finite(m, "matrix")?;
    // Tall matrices are reduced by a QR first so the SVD runs on a square factor.
    let sv = if m.nrows() > m.ncols() {
        m.clone().qr().r().singular_values()
    } else {
        m.singular_values()
    };
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(v))
}

/// `sigma_max / sigma_min`, or infinity when `sigma_min` is below machine
/// epsilon relative to `sigma_max`.
pub fn cond2(m: &DMatrix<f64>) -> Result<f64> {
    let sv = singular_values(m)?;
    Ok(ratio_from_singular_values(&sv, 1))
}

/// Condition number of `A^T A` from the singular values of `A`, without
/// forming the product.
pub fn cond2_normal(a: &DMatrix<f64>) -> Result<f64> {
    let sv = singular_values(a)?;
    Ok(ratio_from_singular_values(&sv, 2))
}

fn ratio_from_singular_values(sv: &DVector<f64>, power: i32) -> f64 {
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if hi == 0.0 {
        return f64::INFINITY;
    }
    if lo < f64::EPSILON * hi {
        return f64::INFINITY;
    }
    (hi / lo).powi(power)
}

fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax() / scale;
    if asym > tol {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Lower Cholesky factor, retrying once with `1e-12 trace / n` on the diagonal.
pub(crate) fn cholesky_with_jitter(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (g + g.transpose()) * 0.5;
    if let Some(c) = sym.clone().cholesky() {
        return Ok(c.l());
    }
    let n = g.nrows();
    let jitter = 1e-12 * sym.trace() / n as f64;
    let mut shifted = sym;
    for i in 0..n {
        shifted[(i, i)] += jitter;
    }
    shifted.cholesky().map(|c| c.l()).ok_or(Error::NotPositiveDefinite)
}

/// Extreme eigenvalues of `G1 v = lambda G2 v` via `L^-1 G1 L^-T` with
/// `G2 = L L^T`. The smallest value is clamped at zero.
pub fn gen_eig_extremes(g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Result<(f64, f64)> {
    if g1.shape() != g2.shape() {
        return Err(Error::DimensionMismatch(format!("pencil of {:?} and {:?}", g1.shape(), g2.shape())));
    }
    if g1.is_empty() {
        return Err(invalid("empty pencil"));
    }
    check_finite(g1, "first Gram matrix")?;
    check_finite(g2, "second Gram matrix")?;
    check_symmetric(g1, 1e-10)?;
    check_symmetric(g2, 1e-10)?;
    let l = cholesky_with_jitter(g2)?;
    let eig = reduced_pencil_eigenvalues(g1, &l)?;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Eigenvalues of `L^-1 G L^-T` for a lower-triangular `L`.
pub(crate) fn reduced_pencil_eigenvalues(g: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<DVector<f64>> {
    let left = l.solve_lower_triangular(g).ok_or(Error::NotPositiveDefinite)?;
    let both = l.solve_lower_triangular(&left.transpose()).ok_or(Error::NotPositiveDefinite)?;
    let sym = (&both + both.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues)
}

/// Eigenvalues of the pencil `(A1^T A1, A2^T A2)` without forming either
/// Gram matrix: with `A2 = Q R`, they are the squared singular values of
/// `A1 R^-1`. Sorted in decreasing order.
pub fn pencil_eigenvalues_from_factors(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = a1.ncols();
    if a2.ncols() != n {
        return Err(Error::DimensionMismatch(format!("factors with {n} and {} columns", a2.ncols())));
    }
    if n == 0 || a2.nrows() < n {
        return Err(invalid("second factor must have at least as many rows as columns"));
    }
    check_finite(a1, "first factor")?;
    check_finite(a2, "second factor")?;
    let r = a2.clone().qr().r();
    let dmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| !(d.abs() > 1e-15 * dmax)) {
        return Err(Error::NotPositiveDefinite);
    }
    // (A1 R^-1)^T = R^-T A1^T.
    let mt = r.tr_solve_upper_triangular(&a1.transpose()).ok_or(Error::NotPositiveDefinite)?;
    let sv = singular_values(&mt.transpose())?;
    Ok(sv.map(|s| s * s))
}

/// Extreme eigenvalues of the pencil `(A1^T A1, A2^T A2)` from its factors.
pub fn pencil_extremes_from_factors(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<(f64, f64)> {
    let ev = pencil_eigenvalues_from_factors(a1, a2)?;
    Ok((ev[ev.len() - 1], ev[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn normal_equation_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let ata = a.transpose() * a;
        ata.cholesky().unwrap().solve(&(a.transpose() * b))
    }

    #[test]
    fn consistent_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let r = solve_lstsq(&a, &b).unwrap();
        assert!((r.coeffs[0] - 1.0).abs() < 1e-14 && (r.coeffs[1] - 2.0).abs() < 1e-14);
        assert!(r.residual_norm < 1e-14);
        assert_eq!(r.rank_estimate, 2);
        assert!(!r.truncated);
    }

    #[test]
    fn averaging() {
        let a = DMatrix::from_element(3, 1, 1.0);
        let b = DVector::from_vec(vec![0.0, 1.0, 2.0]);
        let r = solve_lstsq(&a, &b).unwrap();
        assert!((r.coeffs[0] - 1.0).abs() < 1e-15);
        assert!((r.residual_norm - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 40, 10);
            let b = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
            let r = solve_lstsq(&a, &b).unwrap();
            let want = normal_equation_solve(&a, &b);
            assert!((&r.coeffs - &want).norm() <= 1e-8 * want.norm());
            assert!(((&a * &r.coeffs - &b).norm() - r.residual_norm).abs() < 1e-12);
            let grad = a.transpose() * (&a * &r.coeffs - &b);
            assert!(grad.norm() <= 1e-8 * a.norm() * b.norm());
        }
    }

    #[test]
    fn rank_deficient_columns_are_truncated() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut a = random_matrix(&mut rng, 30, 6);
        let c = a.column(1) * 2.0 - a.column(4);
        a.set_column(5, &c);
        let b = &a * DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.0]);
        let r = solve_lstsq(&a, &b).unwrap();
        assert_eq!(r.rank_estimate, 5);
        assert!(r.truncated);
        assert!((&a * &r.coeffs - &b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_lstsq(&DMatrix::zeros(2, 3), &DVector::zeros(2)).is_err());
        let mut a = DMatrix::from_element(3, 2, 1.0);
        a[(1, 1)] = f64::NAN;
        assert!(matches!(solve_lstsq(&a, &DVector::zeros(3)), Err(Error::NonFinite(_))));
        assert!(solve_lstsq(&DMatrix::from_element(3, 2, 1.0), &DVector::zeros(2)).is_err());
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(&mut rng, 50, 20);
        let b = DVector::from_fn(50, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(solve_lstsq(&a, &b).unwrap(), solve_lstsq(&a, &b).unwrap());
    }

    #[test]
    fn condition_numbers() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0]));
        assert!((cond2(&d).unwrap() - 10.0).abs() < 1e-12);
        let t = 0.3_f64;
        let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((cond2(&rot).unwrap() - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = random_matrix(&mut rng, 12, 5);
        let ka = cond2(&a).unwrap();
        let kata = cond2(&(a.transpose() * &a)).unwrap();
        assert!((kata - ka * ka).abs() <= 1e-6 * kata);
        assert!((cond2_normal(&a).unwrap() - ka * ka).abs() <= 1e-12 * kata);
        assert_eq!(cond2(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap(), f64::INFINITY);
        assert!(cond2(&DMatrix::zeros(0, 0)).is_err());
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = random_matrix(rng, n, n);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn pencil_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let g = random_spd(&mut rng, 6);
        let (lo, hi) = gen_eig_extremes(&g, &g).unwrap();
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
        let (lo, hi) = gen_eig_extremes(&(&g * 2.0), &g).unwrap();
        assert!((lo - 2.0).abs() < 1e-10 && (hi - 2.0).abs() < 1e-10);
    }

    #[test]
    fn pencil_matches_symmetric_square_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let g1 = random_spd(&mut rng, 8);
            let g2 = random_spd(&mut rng, 8);
            let e = SymmetricEigen::new(g2.clone());
            let inv_sqrt = &e.eigenvectors
                * DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt()))
                * e.eigenvectors.transpose();
            let red = &inv_sqrt * &g1 * &inv_sqrt;
            let ev = SymmetricEigen::new((&red + red.transpose()) * 0.5).eigenvalues;
            let (want_lo, want_hi) = (ev.min(), ev.max());
            let (lo, hi) = gen_eig_extremes(&g1, &g2).unwrap();
            assert!((lo - want_lo).abs() <= 1e-8 * want_hi);
            assert!((hi - want_hi).abs() <= 1e-8 * want_hi);
        }
    }

    #[test]
    fn factored_pencil_matches_gram_pencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let a1 = random_matrix(&mut rng, 7, 6);
            let a2 = random_matrix(&mut rng, 15, 6);
            let (lo, hi) = pencil_extremes_from_factors(&a1, &a2).unwrap();
            let (glo, ghi) = gen_eig_extremes(&(a1.transpose() * &a1), &(a2.transpose() * &a2)).unwrap();
            assert!((lo - glo).abs() <= 1e-9 * ghi, "{lo} {glo}");
            assert!((hi - ghi).abs() <= 1e-9 * ghi);
        }
        let a = random_matrix(&mut rng, 9, 4);
        let (lo, hi) = pencil_extremes_from_factors(&(&a * 3.0), &a).unwrap();
        assert!((lo - 9.0).abs() < 1e-12 && (hi - 9.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_errors() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(gen_eig_extremes(&g, &DMatrix::identity(2, 2)), Err(Error::NotSymmetric(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            gen_eig_extremes(&DMatrix::identity(2, 2), &indefinite),
            Err(Error::NotPositiveDefinite)
        ));
    }
}
