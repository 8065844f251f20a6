//! The overdetermined weighted collocation system
//!
//! ```text
//! W^(1/2) [ L Phi(Y, X)     ] alpha = W^(1/2) [ f(Y)         ]
//!         [ theta Phi(Z, X) ]                 [ theta g(Z)   ]
//! ```
//!
//! with interior rows first and boundary rows after them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{PointSet, TransformKind, DEDUP_TOL, MAX_DIM};
use crate::kernels::MaternSpec;
use crate::pde::{Coefficients, EllipticOperator, EllipticProblem};

/// Diagonal row weighting applied before the least-squares solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    Identity,
    /// Independent uniform draws in `[0.5, 1.5]` from a ChaCha8 stream.
    Random { seed: u64 },
    /// Tensor trapezoid weights on the transformed grid.
    Trapezoid,
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Identity => "identity",
            WeightScheme::Random { .. } => "random",
            WeightScheme::Trapezoid => "trapezoid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemMeta {
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// Fill distance of the trial centres, when the caller measured it.
    pub h_x: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CollocationSystem {
    /// `(N_Y + N_Z) x N_X`.
    pub design: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Diagonal of `W`; the design and rhs rows carry `sqrt(w)`.
    pub row_weights: DVector<f64>,
    pub theta: f64,
    pub meta: SystemMeta,
}

impl CollocationSystem {
    pub fn rows(&self) -> usize {
        self.design.nrows()
    }

    /// `max w / min w`.
    pub fn kappa_w(&self) -> f64 {
        self.row_weights.max() / self.row_weights.min()
    }
}

/// `h^(-3/2)`.
pub fn theta_default(h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("fill distance must be positive, got {h}")));
    }
    Ok(h.powf(-1.5))
}

pub fn assemble_system(
    prob: &EllipticProblem,
    spec: &MaternSpec,
    x: &PointSet,
    y: &PointSet,
    z: &PointSet,
    theta: f64,
) -> Result<CollocationSystem> {
    if x.is_empty() || y.is_empty() || z.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(invalid(format!("boundary scaling must be positive, got {theta}")));
    }
    let dim = spec.dim;
    for (name, set) in [("trial centres", x), ("interior nodes", y), ("boundary nodes", z)] {
        if set.dim() != dim {
            return Err(Error::DimensionMismatch(format!("{name} have dimension {}, kernel {dim}", set.dim())));
        }
    }
    if prob.dim() != dim {
        return Err(Error::DimensionMismatch(format!("problem dimension {}, kernel {dim}", prob.dim())));
    }
    // The second-derivative guard lives in the checked jet.
    spec.jet(&x.points()[0], &y.points()[0])?;
    if let Some((i, j)) = x.find_duplicate() {
        return Err(Error::DuplicatePoints(i, j));
    }

    let (n_x, n_y, n_z) = (x.len(), y.len(), z.len());
    let rows = n_y + n_z;
    let mut design = DMatrix::zeros(rows, n_x);
    design.rows_mut(0, n_y).copy_from(&operator_matrix(spec, &prob.op, x, y));
    design.rows_mut(n_y, n_z).copy_from(&(kernel_matrix(spec, z, x) * theta));
    let mut rhs = DVector::zeros(rows);
    for (i, p) in y.iter().enumerate() {
        rhs[i] = (prob.f)(p);
    }
    for (i, p) in z.iter().enumerate() {
        rhs[n_y + i] = theta * (prob.g)(p);
    }
    if design.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    Ok(CollocationSystem {
        design,
        rhs,
        row_weights: DVector::from_element(rows, 1.0),
        theta,
        meta: SystemMeta { n_x, n_y, n_z, h_x: None },
    })
}

/// Scales row `i` of the design and rhs by `sqrt(w_i)` and folds `w` into
/// `row_weights`.
pub fn weight_and_scale(mut sys: CollocationSystem, w: &DVector<f64>) -> Result<CollocationSystem> {
    if w.len() != sys.rows() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} rows", w.len(), sys.rows())));
    }
    if let Some(bad) = w.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(invalid(format!("weights must be positive and finite, got {bad}")));
    }
    let sqrt_w = w.map(f64::sqrt);
    for mut col in sys.design.column_iter_mut() {
        col.component_mul_assign(&sqrt_w);
    }
    sys.rhs.component_mul_assign(&sqrt_w);
    sys.row_weights.component_mul_assign(w);
    Ok(sys)
}

/// Composite trapezoid weights of strictly increasing 1-D nodes.
pub fn trapezoid_weights_1d(nodes: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n < 2 {
        return Err(invalid("trapezoid rule needs at least two nodes"));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("trapezoid nodes must be strictly increasing"));
    }
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let half = 0.5 * (nodes[i + 1] - nodes[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    Ok(w)
}

/// Axis coordinates of a tensor grid and the per-axis index of every point.
struct TensorLayout {
    axes: Vec<Vec<f64>>,
    index: Vec<[usize; MAX_DIM]>,
}

fn tensor_layout(set: &PointSet) -> Result<TensorLayout> {
    let dim = set.dim();
    let mut axes = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut vals: Vec<f64> = set.iter().map(|p| p[k]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_TOL);
        axes.push(vals);
    }
    let expected: usize = axes.iter().map(Vec::len).product();
    if expected != set.len() || axes.iter().any(|a| a.len() < 2) {
        return Err(Error::NotATensorGrid(format!(
            "{} points but axis counts {:?}",
            set.len(),
            axes.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let mut seen = vec![false; expected];
    let mut index = Vec::with_capacity(set.len());
    for p in set {
        let mut idx = [0usize; MAX_DIM];
        let mut flat = 0;
        for k in 0..dim {
            let a = &axes[k];
            let i = a.partition_point(|v| *v < p[k] - DEDUP_TOL);
            idx[k] = i;
            flat = flat * a.len() + i;
        }
        if seen[flat] {
            return Err(Error::NotATensorGrid("repeated grid node".into()));
        }
        seen[flat] = true;
        index.push(idx);
    }
    Ok(TensorLayout { axes, index })
}

/// Row weights for `N_Y` interior rows followed by `N_Z` boundary rows.
///
/// `y_pre` and `z_pre` are the nodes before `transform` is applied. For
/// [`WeightScheme::Trapezoid`] the interior weight of a node is the product of
/// the 1-D trapezoid weights of its transformed axis coordinates, and the
/// boundary weight sums, over the faces containing the node, the product of
/// the 1-D weights along that face.
pub fn build_weights(
    scheme: WeightScheme,
    y_pre: &PointSet,
    z_pre: &PointSet,
    transform: &TransformKind,
) -> Result<DVector<f64>> {
    let (n_y, n_z) = (y_pre.len(), z_pre.len());
    match scheme {
        WeightScheme::Identity => Ok(DVector::from_element(n_y + n_z, 1.0)),
        WeightScheme::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(DVector::from_iterator(n_y + n_z, (0..n_y + n_z).map(|_| rng.random_range(0.5..=1.5))))
        }
        WeightScheme::Trapezoid => {
            let layout = tensor_layout(y_pre)?;
            let dim = y_pre.dim();
            let mut w1d = Vec::with_capacity(dim);
            for axis in &layout.axes {
                let mapped: Vec<f64> = axis.iter().map(|&t| transform.apply_scalar(t)).collect();
                w1d.push(trapezoid_weights_1d(&mapped)?);
            }
            let mut w = Vec::with_capacity(n_y + n_z);
            for idx in &layout.index {
                w.push((0..dim).map(|k| w1d[k][idx[k]]).product::<f64>());
            }
            for p in z_pre {
                let mut idx = [0usize; MAX_DIM];
                for k in 0..dim {
                    let a = &layout.axes[k];
                    let i = a.partition_point(|v| *v < p[k] - DEDUP_TOL);
                    if i >= a.len() || (a[i] - p[k]).abs() > DEDUP_TOL {
                        return Err(Error::NotATensorGrid("boundary node is not a grid node".into()));
                    }
                    idx[k] = i;
                }
                let mut wz = 0.0;
                for face in 0..dim {
                    let last = layout.axes[face].len() - 1;
                    if idx[face] != 0 && idx[face] != last {
                        continue;
                    }
                    wz += (0..dim).filter(|&k| k != face).map(|k| w1d[k][idx[k]]).product::<f64>();
                }
                if wz == 0.0 {
                    return Err(Error::NotATensorGrid("boundary node is not on the grid boundary".into()));
                }
                w.push(wz);
            }
            Ok(DVector::from_vec(w))
        }
    }
}

/// `sum_j alpha_j Phi(p, x_j)` at every evaluation point.
pub fn evaluate_expansion(spec: &MaternSpec, centers: &PointSet, alpha: &DVector<f64>, at: &PointSet) -> Vec<f64> {
    at.iter()
        .map(|p| centers.iter().zip(alpha.iter()).map(|(c, a)| a * spec.eval(p, c)).sum())
        .collect()
}

/// `Phi(a_i, b_j)`.
pub fn kernel_matrix(spec: &MaternSpec, a: &PointSet, b: &PointSet) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| spec.eval(&a.points()[i], &b.points()[j]))
}

/// `[L Phi(., x_j)](y_i)`. Callers check `nu >= 2` beforehand.
pub fn operator_matrix(spec: &MaternSpec, op: &EllipticOperator, x: &PointSet, y: &PointSet) -> DMatrix<f64> {
    let coeffs: Vec<Coefficients> = y.iter().map(|p| op.coefficients(p)).collect();
    let mut m = DMatrix::zeros(y.len(), x.len());
    for (j, xc) in x.iter().enumerate() {
        let mut col = m.column_mut(j);
        for (i, (yp, co)) in y.iter().zip(&coeffs).enumerate() {
            col[i] = spec.apply_coefficients(co, yp, xc);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_transform, boundary_subset, tensor_grid, Point, PointKind};
    use crate::kernels::apply_elliptic;
    use crate::pde::{make_problem, ProblemKind};
    use std::sync::Arc;

    fn identity_problem() -> EllipticProblem {
        EllipticProblem {
            name: "identity".into(),
            op: EllipticOperator::identity_map(2),
            f: Arc::new(|p| p[0] + 2.0),
            g: Arc::new(|p| p[1] - 3.0),
            exact: None,
        }
    }

    fn single(p: Point, kind: PointKind) -> PointSet {
        PointSet::new(2, vec![p], kind).unwrap()
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_default(1.0).unwrap(), 1.0);
        assert_eq!(theta_default(0.25).unwrap(), 8.0);
        assert!((theta_default(0.01).unwrap() - 1000.0).abs() < 1e-9);
        assert!(theta_default(0.0).is_err());
        assert!(theta_default(-1.0).is_err());
    }

    #[test]
    fn single_entry_system() {
        let spec = MaternSpec::new(4, 2, 1.0).unwrap();
        let x = single(Point::new2(0.1, 0.2), PointKind::InteriorOrMixed);
        let y = single(Point::new2(-0.3, 0.4), PointKind::InteriorOrMixed);
        let z = single(Point::new2(1.0, 0.5), PointKind::BoundaryOnly);
        let prob = identity_problem();
        let sys = assemble_system(&prob, &spec, &x, &y, &z, 1.0).unwrap();
        let (xp, yp, zp) = (x.points()[0], y.points()[0], z.points()[0]);
        assert_eq!(sys.design.shape(), (2, 1));
        assert!((sys.design[(0, 0)] - spec.eval(&yp, &xp)).abs() < 1e-15);
        assert_eq!(sys.design[(1, 0)], spec.eval(&zp, &xp));
        assert_eq!(sys.design[(0, 0)], apply_elliptic(&spec, &prob.op, &yp, &xp).unwrap());
        assert_eq!(sys.rhs.as_slice(), &[1.7, -2.5]);
    }

    #[test]
    fn shapes_and_pde4_rhs() {
        let spec = MaternSpec::new(5, 2, 5.0).unwrap();
        let x = tensor_grid(3, 2).unwrap();
        let (y, _) = boundary_subset(&tensor_grid(4, 2).unwrap());
        let (_, z) = boundary_subset(&tensor_grid(4, 2).unwrap());
        let prob = make_problem(ProblemKind::Pde4).unwrap();
        let sys = assemble_system(&prob, &spec, &x, &y, &z, 8.0).unwrap();
        assert_eq!(sys.design.shape(), (28, 9));
        assert!(sys.rhs.rows(0, 16).iter().all(|&v| v == 1.0));
        assert!(sys.rhs.rows(16, 12).iter().all(|&v| v == 0.0));
        assert_eq!(sys.theta, 8.0);
        assert!(sys.row_weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn boundary_rows_carry_theta() {
        let spec = MaternSpec::new(4, 2, 5.0).unwrap();
        let x = tensor_grid(3, 2).unwrap();
        let (y, z) = boundary_subset(&tensor_grid(5, 2).unwrap());
        let prob = make_problem(ProblemKind::Pde1).unwrap();
        let a = assemble_system(&prob, &spec, &x, &y, &z, 1.0).unwrap();
        let b = assemble_system(&prob, &spec, &x, &y, &z, 3.0).unwrap();
        let ny = y.len();
        assert_eq!(a.design.rows(0, ny), b.design.rows(0, ny));
        for i in ny..a.rows() {
            assert!((3.0 * a.rhs[i] - b.rhs[i]).abs() <= 1e-15 * b.rhs[i].abs().max(1.0));
            for j in 0..x.len() {
                assert!((3.0 * a.design[(i, j)] - b.design[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn duplicate_centres_rejected() {
        let spec = MaternSpec::new(4, 2, 5.0).unwrap();
        let x = PointSet::interior(2, vec![Point::new2(0.0, 0.0), Point::new2(0.0, 0.0)]).unwrap();
        let (y, z) = boundary_subset(&tensor_grid(3, 2).unwrap());
        let prob = make_problem(ProblemKind::Pde1).unwrap();
        assert!(matches!(assemble_system(&prob, &spec, &x, &y, &z, 1.0), Err(Error::DuplicatePoints(0, 1))));
        assert!(assemble_system(&prob, &spec, &y, &y, &z, 0.0).is_err());
    }

    #[test]
    fn trapezoid_1d_nonuniform() {
        let w = trapezoid_weights_1d(&[0.0, 0.2, 1.0]).unwrap();
        let want = [0.1, 0.5, 0.4];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(trapezoid_weights_1d(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn trapezoid_sums() {
        for t in [TransformKind::Identity, TransformKind::Sine, TransformKind::SignedSquare] {
            for n in [3, 5, 8, 13] {
                let p = tensor_grid(n, 2).unwrap();
                let (_, z) = boundary_subset(&p);
                let w = build_weights(WeightScheme::Trapezoid, &p, &z, &t).unwrap();
                let interior: f64 = w.rows(0, p.len()).sum();
                let boundary: f64 = w.rows(p.len(), z.len()).sum();
                assert!((interior - 4.0).abs() < 1e-12, "{t:?} n={n}: {interior}");
                assert!((boundary - 8.0).abs() < 1e-12, "{t:?} n={n}: {boundary}");
                assert!(w.iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn trapezoid_integrates_bilinear_exactly() {
        let p = tensor_grid(7, 2).unwrap();
        let (_, z) = boundary_subset(&p);
        let w = build_weights(WeightScheme::Trapezoid, &p, &z, &TransformKind::Identity).unwrap();
        // int (1 + 2x + 3y + 4xy) over the square = 4.
        let q: f64 = p.iter().zip(w.iter()).map(|(pt, wi)| wi * (1.0 + 2.0 * pt[0] + 3.0 * pt[1] + 4.0 * pt[0] * pt[1])).sum();
        assert!((q - 4.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_order_independent() {
        let p = tensor_grid(5, 2).unwrap();
        let mut shuffled: Vec<Point> = p.points().to_vec();
        shuffled.reverse();
        let q = PointSet::interior(2, shuffled).unwrap();
        let (_, z) = boundary_subset(&p);
        let a = build_weights(WeightScheme::Trapezoid, &p, &z, &TransformKind::Sine).unwrap();
        let b = build_weights(WeightScheme::Trapezoid, &q, &z, &TransformKind::Sine).unwrap();
        for i in 0..p.len() {
            assert_eq!(a[i], b[p.len() - 1 - i]);
        }
    }

    #[test]
    fn trapezoid_needs_a_grid() {
        let p = PointSet::interior(2, vec![Point::new2(0.0, 0.0), Point::new2(0.5, 0.1), Point::new2(0.2, 0.3)]).unwrap();
        let (_, z) = boundary_subset(&tensor_grid(3, 2).unwrap());
        assert!(matches!(
            build_weights(WeightScheme::Trapezoid, &p, &z, &TransformKind::Identity),
            Err(Error::NotATensorGrid(_))
        ));
    }

    #[test]
    fn random_weights_reproducible() {
        let p = tensor_grid(2, 2).unwrap();
        let z = PointSet::new(2, vec![Point::new2(1.0, 0.0)], PointKind::BoundaryOnly).unwrap();
        let a = build_weights(WeightScheme::Random { seed: 42 }, &p, &z, &TransformKind::Identity).unwrap();
        let b = build_weights(WeightScheme::Random { seed: 42 }, &p, &z, &TransformKind::Identity).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| (0.5..=1.5).contains(&v)));
        let c = build_weights(WeightScheme::Random { seed: 43 }, &p, &z, &TransformKind::Identity).unwrap();
        assert_ne!(a, c);
    }

    fn toy() -> CollocationSystem {
        CollocationSystem {
            design: DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            rhs: DVector::from_vec(vec![1.0, -1.0, 2.0]),
            row_weights: DVector::from_element(3, 1.0),
            theta: 1.0,
            meta: SystemMeta { n_x: 2, n_y: 2, n_z: 1, h_x: None },
        }
    }

    #[test]
    fn weighting_examples() {
        let ones = weight_and_scale(toy(), &DVector::from_element(3, 1.0)).unwrap();
        assert_eq!(ones.design, toy().design);
        let fours = weight_and_scale(toy(), &DVector::from_element(3, 4.0)).unwrap();
        assert_eq!(fours.design, toy().design * 2.0);
        assert_eq!(fours.rhs, toy().rhs * 2.0);

        let w = DVector::from_vec(vec![0.5, 2.0, 1.25]);
        let s = weight_and_scale(toy(), &w).unwrap();
        let a = toy().design;
        // Brute-force A^T W A.
        let mut want = DMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                want[(i, j)] = (0..3).map(|r| a[(r, i)] * w[r] * a[(r, j)]).sum::<f64>();
            }
        }
        let got = s.design.transpose() * &s.design;
        assert!((got - want).abs().max() < 1e-12);
        assert_eq!(s.row_weights, w);
        assert!((s.kappa_w() - 4.0).abs() < 1e-15);

        assert!(weight_and_scale(toy(), &DVector::from_vec(vec![1.0, 0.0, 1.0])).is_err());
        assert!(weight_and_scale(toy(), &DVector::from_element(2, 1.0)).is_err());
    }

    #[test]
    fn transformed_grid_weights_match_mapped_nodes() {
        let p = tensor_grid(5, 2).unwrap();
        let (_, z) = boundary_subset(&p);
        let y = apply_transform(&TransformKind::SignedSquare, &p).unwrap();
        let w = build_weights(WeightScheme::Trapezoid, &p, &z, &TransformKind::SignedSquare).unwrap();
        // Axis nodes -1, -0.25, 0, 0.25, 1 give weights 0.375, 0.5, 0.25, 0.5, 0.375.
        let w1 = [0.375, 0.5, 0.25, 0.5, 0.375];
        for (i, pt) in y.iter().enumerate() {
            let ix = [-1.0, -0.25, 0.0, 0.25, 1.0].iter().position(|v| *v == pt[0]).unwrap();
            let iy = [-1.0, -0.25, 0.0, 0.25, 1.0].iter().position(|v| *v == pt[1]).unwrap();
            assert!((w[i] - w1[ix] * w1[iy]).abs() < 1e-15);
        }
    }
}
