//! Empirical stability and norm-equivalence constants of the trial space.
//!
//! Three quadratic forms on kernel coefficient vectors appear here:
//!
//! * the weighted discrete data norm `sum_Y w |L u|^2 + theta^2 sum_Z w |u|^2`;
//! * its continuous counterpart `||L u||^2 + theta^2 ||u||^2_boundary`, by fine
//!   quadrature;
//! * the `H^2` norm `sum_{|a| <= 2} ||D^a u||^2`, by the same quadrature.
//!
//! Each is represented by a factor `A` with the form equal to `|A c|^2`, and
//! pencil eigenvalues are taken from the factors directly.

mod riemann;

use nalgebra::DMatrix;

pub use riemann::{
    boundary_riemann_points, check_bound, lower_riemann_points, BoundCheck, RiemannSelection, BAND_CONSTANT,
    BOUND_TOL,
};

use crate::assembly::{build_weights, kernel_matrix, operator_matrix, WeightScheme};
use crate::error::{invalid, Error, Result};
use crate::geometry::{boundary_subset, fill_distance, tensor_grid, PointSet, TransformKind, MAX_DIM};
use crate::kernels::MaternSpec;
use crate::pde::EllipticOperator;
use crate::solver::pencil_extremes_from_factors;

/// Largest trial space accepted by the Gram-based routines.
pub const MAX_TRIAL_EQUIV: usize = 1500;
pub const MAX_TRIAL_RAYLEIGH: usize = 800;

/// Interior and boundary quadrature used as the continuous reference.
#[derive(Clone, Debug)]
pub struct FineQuadrature {
    pub interior: PointSet,
    pub interior_weights: Vec<f64>,
    pub boundary: PointSet,
    pub boundary_weights: Vec<f64>,
}

impl FineQuadrature {
    /// Tensor trapezoid rule with `n_per_axis` nodes per axis; the boundary
    /// rule is the trapezoid rule along each face.
    pub fn trapezoid(n_per_axis: usize, dim: usize) -> Result<Self> {
        let grid = tensor_grid(n_per_axis, dim)?;
        let (y, z) = boundary_subset(&grid);
        let w = build_weights(WeightScheme::Trapezoid, &y, &z, &TransformKind::Identity)?;
        let (ny, nz) = (y.len(), z.len());
        Ok(Self {
            interior: y,
            interior_weights: w.rows(0, ny).iter().copied().collect(),
            boundary: z,
            boundary_weights: w.rows(ny, nz).iter().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.interior.dim()
    }
}

/// Rows `sqrt(w_i) m_i`.
fn scale_rows(mut m: DMatrix<f64>, w: impl IntoIterator<Item = f64>) -> DMatrix<f64> {
    for (mut row, wi) in m.row_iter_mut().zip(w) {
        row *= wi.sqrt();
    }
    m
}

fn stack(top: DMatrix<f64>, bottom: DMatrix<f64>) -> DMatrix<f64> {
    let (a, b, n) = (top.nrows(), bottom.nrows(), top.ncols());
    let mut out = DMatrix::zeros(a + b, n);
    out.rows_mut(0, a).copy_from(&top);
    out.rows_mut(a, b).copy_from(&bottom);
    out
}

fn check_positive(w: impl IntoIterator<Item = f64>) -> Result<()> {
    for v in w {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(format!("weights must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// Factor of the weighted discrete data norm.
pub fn discrete_norm_factor(
    spec: &MaternSpec,
    op: &EllipticOperator,
    x: &PointSet,
    y: &PointSet,
    z: &PointSet,
    w: &[f64],
    theta: f64,
) -> Result<DMatrix<f64>> {
    if w.len() != y.len() + z.len() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} nodes", w.len(), y.len() + z.len())));
    }
    check_positive(w.iter().copied())?;
    let interior = scale_rows(operator_matrix(spec, op, x, y), w[..y.len()].iter().copied());
    let boundary = scale_rows(kernel_matrix(spec, z, x) * theta, w[y.len()..].iter().copied());
    Ok(stack(interior, boundary))
}

/// Factor of `||L u||^2 + theta^2 ||u||^2` on the boundary, by fine quadrature.
pub fn continuous_norm_factor(
    spec: &MaternSpec,
    op: &EllipticOperator,
    x: &PointSet,
    theta: f64,
    fine: &FineQuadrature,
) -> Result<DMatrix<f64>> {
    let w: Vec<f64> = fine.interior_weights.iter().chain(&fine.boundary_weights).copied().collect();
    discrete_norm_factor(spec, op, x, &fine.interior, &fine.boundary, &w, theta)
}

/// Factor of the `H^2` Gram: every multi-index with `|a| <= 2` contributes
/// one block of `sqrt(w) D^a Phi(q, x_j)`.
pub fn h2_norm_factor(spec: &MaternSpec, x: &PointSet, fine: &FineQuadrature) -> Result<DMatrix<f64>> {
    let dim = spec.dim;
    let mut derivs: Vec<(usize, usize)> = Vec::new();
    // (i, j) with MAX_DIM meaning "no derivative" along that slot.
    derivs.push((MAX_DIM, MAX_DIM));
    for i in 0..dim {
        derivs.push((i, MAX_DIM));
    }
    for i in 0..dim {
        for j in i..dim {
            derivs.push((i, j));
        }
    }
    let nq = fine.interior.len();
    let mut m = DMatrix::zeros(derivs.len() * nq, x.len());
    for (col, xc) in x.iter().enumerate() {
        for (row, (q, w)) in fine.interior.iter().zip(&fine.interior_weights).enumerate() {
            let jet = spec.jet(q, xc)?;
            let sw = w.sqrt();
            for (b, &(i, j)) in derivs.iter().enumerate() {
                let v = match (i, j) {
                    (MAX_DIM, _) => jet.value,
                    (i, MAX_DIM) => jet.gradient[i],
                    (i, j) => jet.hessian[i][j],
                };
                m[(b * nq + row, col)] = sw * v;
            }
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub c_low: f64,
    pub c_high: f64,
    pub spread: f64,
    pub h_x: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// `N_Y / N_X`, the logged denseness of the nodes against the centres.
    pub density_ratio: f64,
    pub scheme: Option<WeightScheme>,
}

/// Extreme constants `c` with `c_low |u|_cont^2 <= |u|_disc^2 <= c_high |u|_cont^2`
/// over the trial space spanned by `x`.
#[allow(clippy::too_many_arguments)]
pub fn norm_equiv_constants(
    spec: &MaternSpec,
    op: &EllipticOperator,
    x: &PointSet,
    y: &PointSet,
    z: &PointSet,
    w: &[f64],
    theta: f64,
    fine: &FineQuadrature,
) -> Result<EquivalenceReport> {
    if x.len() > MAX_TRIAL_EQUIV {
        return Err(invalid(format!("trial space of {} exceeds {MAX_TRIAL_EQUIV}", x.len())));
    }
    let discrete = discrete_norm_factor(spec, op, x, y, z, w, theta)?;
    let continuous = continuous_norm_factor(spec, op, x, theta, fine)?;
    let (c_low, c_high) = pencil_extremes_from_factors(&discrete, &continuous)?;
    Ok(EquivalenceReport {
        c_low,
        c_high,
        spread: c_high / c_low,
        h_x: fill_distance(x, 64)?,
        n_x: x.len(),
        n_y: y.len(),
        density_ratio: y.len() as f64 / x.len() as f64,
        scheme: None,
    })
}

/// Smallest `lambda` with `||L u||^2 + theta^2 ||u||^2_boundary >= lambda ||u||_{H^2}^2`
/// over the trial space. Only `q = 0` is supported.
pub fn stability_rayleigh(
    spec: &MaternSpec,
    op: &EllipticOperator,
    x: &PointSet,
    theta: f64,
    fine: &FineQuadrature,
    q: u32,
) -> Result<f64> {
    if q != 0 {
        return Err(invalid(format!("only q = 0 is supported, got {q}")));
    }
    if x.len() > MAX_TRIAL_RAYLEIGH {
        return Err(invalid(format!("trial space of {} exceeds {MAX_TRIAL_RAYLEIGH}", x.len())));
    }
    let data = continuous_norm_factor(spec, op, x, theta, fine)?;
    let h2 = h2_norm_factor(spec, x, fine)?;
    Ok(pencil_extremes_from_factors(&data, &h2)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::solver::gen_eig_extremes;

    fn setup() -> (MaternSpec, EllipticOperator, PointSet) {
        (MaternSpec::new(4, 2, 5.0).unwrap(), EllipticOperator::modified_helmholtz(2), tensor_grid(4, 2).unwrap())
    }

    #[test]
    fn fine_rule_integrates_constants() {
        let f = FineQuadrature::trapezoid(9, 2).unwrap();
        assert!((f.interior_weights.iter().sum::<f64>() - 4.0).abs() < 1e-13);
        assert!((f.boundary_weights.iter().sum::<f64>() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn identical_rules_give_unit_constants() {
        let (spec, op, x) = setup();
        let fine = FineQuadrature::trapezoid(17, 2).unwrap();
        let w: Vec<f64> = fine.interior_weights.iter().chain(&fine.boundary_weights).copied().collect();
        let r = norm_equiv_constants(&spec, &op, &x, &fine.interior, &fine.boundary, &w, 3.0, &fine).unwrap();
        assert!((r.c_low - 1.0).abs() < 1e-8 && (r.c_high - 1.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn weights_scale_constants() {
        let (spec, op, x) = setup();
        let fine = FineQuadrature::trapezoid(25, 2).unwrap();
        let (y, z) = boundary_subset(&tensor_grid(13, 2).unwrap());
        let w = build_weights(WeightScheme::Trapezoid, &y, &z, &TransformKind::Identity).unwrap();
        let w: Vec<f64> = w.iter().copied().collect();
        let a = norm_equiv_constants(&spec, &op, &x, &y, &z, &w, 2.0, &fine).unwrap();
        let w3: Vec<f64> = w.iter().map(|v| 3.0 * v).collect();
        let b = norm_equiv_constants(&spec, &op, &x, &y, &z, &w3, 2.0, &fine).unwrap();
        assert!((b.c_low - 3.0 * a.c_low).abs() <= 1e-9 * b.c_low);
        assert!((b.c_high - 3.0 * a.c_high).abs() <= 1e-9 * b.c_high);
        assert!(a.c_low > 0.0 && a.c_low <= a.c_high);
    }

    #[test]
    fn factored_and_gram_pencils_agree() {
        let (spec, op, x) = setup();
        let fine = FineQuadrature::trapezoid(13, 2).unwrap();
        let (y, z) = boundary_subset(&tensor_grid(7, 2).unwrap());
        let w = vec![0.1; y.len() + z.len()];
        let a = discrete_norm_factor(&spec, &op, &x, &y, &z, &w, 1.5).unwrap();
        let c = continuous_norm_factor(&spec, &op, &x, 1.5, &fine).unwrap();
        let (lo, hi) = pencil_extremes_from_factors(&a, &c).unwrap();
        let (glo, ghi) = gen_eig_extremes(&(a.transpose() * &a), &(c.transpose() * &c)).unwrap();
        assert!((lo - glo).abs() <= 1e-6 * lo, "{lo} {glo}");
        assert!((hi - ghi).abs() <= 1e-8 * hi);
    }

    #[test]
    fn single_centre_rayleigh_quotient() {
        let spec = MaternSpec::new(4, 2, 5.0).unwrap();
        let op = EllipticOperator::modified_helmholtz(2);
        let x = PointSet::interior(2, vec![Point::new2(0.2, -0.1)]).unwrap();
        let fine = FineQuadrature::trapezoid(41, 2).unwrap();
        let theta = 2.0;
        let lam = stability_rayleigh(&spec, &op, &x, theta, &fine, 0).unwrap();
        let xc = x.points()[0];
        let (mut num, mut den) = (0.0, 0.0);
        for (q, w) in fine.interior.iter().zip(&fine.interior_weights) {
            let j = spec.jet(q, &xc).unwrap();
            let lu = j.laplacian() - j.value;
            num += w * lu * lu;
            let h = j.hessian;
            den += w * (j.value.powi(2)
                + j.gradient[0].powi(2)
                + j.gradient[1].powi(2)
                + h[0][0].powi(2)
                + h[0][1].powi(2)
                + h[1][1].powi(2));
        }
        for (q, w) in fine.boundary.iter().zip(&fine.boundary_weights) {
            num += theta * theta * w * spec.eval(q, &xc).powi(2);
        }
        assert!((lam - num / den).abs() <= 1e-10 * lam, "{lam} vs {}", num / den);
    }

    #[test]
    fn rayleigh_is_order_independent() {
        let (spec, op, x) = setup();
        let fine = FineQuadrature::trapezoid(17, 2).unwrap();
        let mut pts = x.points().to_vec();
        pts.reverse();
        pts.swap(0, 5);
        let shuffled = PointSet::interior(2, pts).unwrap();
        let a = stability_rayleigh(&spec, &op, &x, 2.0, &fine, 0).unwrap();
        let b = stability_rayleigh(&spec, &op, &shuffled, 2.0, &fine, 0).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-8 * a);
        assert!(stability_rayleigh(&spec, &op, &x, 2.0, &fine, 1).is_err());
    }
}
