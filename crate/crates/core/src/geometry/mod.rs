//! Point sets on the box `[-1, 1]^d`: grids, coordinate transforms, boundary
//! extraction, fill/separation distances and the closest-point map onto the
//! box boundary.

mod cloud;
mod fill;
mod neighbors;
mod point;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

pub use cloud::{scattered_cloud_near_line, scattered_cloud_with, CloudOptions};
pub use fill::{fill_distance, fill_distance_where, separation_distance};
pub use neighbors::NeighborGrid;
pub(crate) use neighbors::DynamicGrid;
pub use point::{Point, DEDUP_TOL, MAX_DIM};

/// Default number of probes per axis used when measuring fill distances.
pub const DEFAULT_PROBE_N: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    /// Points anywhere in the closed box.
    InteriorOrMixed,
    /// Every point has a coordinate of magnitude one.
    BoundaryOnly,
}

/// An ordered list of points of a common dimension.
#[derive(Clone, Debug)]
pub struct PointSet {
    dim: usize,
    points: Vec<Point>,
    kind: PointKind,
}

impl PointSet {
    pub fn new(dim: usize, points: Vec<Point>, kind: PointKind) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} in a {dim}-dimensional set",
                p.dim()
            )));
        }
        if kind == PointKind::BoundaryOnly {
            if let Some(p) = points.iter().find(|p| !p.on_box_boundary(DEDUP_TOL)) {
                return Err(invalid(format!("{p:?} is not on the box boundary")));
            }
        }
        Ok(Self { dim, points, kind })
    }

    pub fn interior(dim: usize, points: Vec<Point>) -> Result<Self> {
        Self::new(dim, points, PointKind::InteriorOrMixed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Index pair of the first two points closer than [`DEDUP_TOL`], if any.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        if self.points.len() < 2 {
            return None;
        }
        let grid = NeighborGrid::new(&self.points);
        self.points.iter().enumerate().find_map(|(i, p)| {
            grid.nearest(p, Some(i))
                .filter(|&(_, d)| d < DEDUP_TOL)
                .map(|(j, _)| (i.min(j), i.max(j)))
        })
    }

    /// Drops later copies of points that coincide within [`DEDUP_TOL`].
    pub fn dedup(&self) -> PointSet {
        let mut grid = DynamicGrid::new(self.dim, 0.05);
        for p in &self.points {
            if !grid.any_within(p, DEDUP_TOL) {
                grid.push(*p);
            }
        }
        PointSet { dim: self.dim, points: grid.points, kind: self.kind }
    }

    /// Concatenation of two sets of the same dimension, keeping `self` first.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("union of sets of different dimension".into()));
        }
        let kind = if self.kind == PointKind::BoundaryOnly && other.kind == PointKind::BoundaryOnly {
            PointKind::BoundaryOnly
        } else {
            PointKind::InteriorOrMixed
        };
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Ok(PointSet { dim: self.dim, points, kind })
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Componentwise coordinate map of the closed box onto itself.
#[derive(Clone)]
pub enum TransformKind {
    Identity,
    /// `t -> sin(pi t / 2)`
    Sine,
    /// `t -> sgn(t) t^2`
    SignedSquare,
    /// A user map; it must send `[-1, 1]` into `[-1, 1]`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Sine => "sine",
            TransformKind::SignedSquare => "signed-square",
            TransformKind::Custom(_) => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" | "id" => Ok(Self::Identity),
            "sine" | "sin" => Ok(Self::Sine),
            "signed-square" | "sq" => Ok(Self::SignedSquare),
            _ => Err(invalid(format!("unknown transform `{s}`"))),
        }
    }

    /// Applies the map to one coordinate. `-1`, `0` and `1` are returned unchanged
    /// by the built-in maps.
    pub fn apply_scalar(&self, t: f64) -> f64 {
        match self {
            TransformKind::Identity => t,
            TransformKind::Sine => {
                if t == 0.0 || t.abs() == 1.0 {
                    t
                } else {
                    (std::f64::consts::FRAC_PI_2 * t).sin()
                }
            }
            TransformKind::SignedSquare => t.signum() * t * t,
            TransformKind::Custom(f) => f(t),
        }
    }
}

/// `n_per_axis^dim` equispaced points including the box faces, in lexicographic
/// order with the last coordinate varying fastest.
pub fn tensor_grid(n_per_axis: usize, dim: usize) -> Result<PointSet> {
    if n_per_axis < 2 {
        return Err(invalid(format!("tensor grid needs at least 2 points per axis, got {n_per_axis}")));
    }
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let axis = grid_axis(n_per_axis);
    let total = n_per_axis.pow(dim as u32);
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut c = [0.0; MAX_DIM];
        let mut rem = flat;
        for k in (0..dim).rev() {
            c[k] = axis[rem % n_per_axis];
            rem /= n_per_axis;
        }
        points.push(Point::from_array(c, dim));
    }
    PointSet::interior(dim, points)
}

/// The `n` equispaced nodes of `[-1, 1]` with exact endpoints and midpoint.
pub fn grid_axis(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if 2 * i == n - 1 {
                0.0
            } else {
                // Symmetric formula keeps t_i = -t_{n-1-i} bitwise.
                let a = i as f64;
                (2.0 * a - last) / last
            }
        })
        .collect()
}

pub fn apply_transform(t: &TransformKind, set: &PointSet) -> Result<PointSet> {
    let mut out = Vec::with_capacity(set.len());
    for p in set {
        for &c in p.coords() {
            if c.abs() > 1.0 + DEDUP_TOL {
                return Err(Error::OutOfBox { value: c });
            }
        }
        let q = p.map(|c| t.apply_scalar(c.clamp(-1.0, 1.0)));
        if let Some(&bad) = q.coords().iter().find(|c| !c.is_finite() || c.abs() > 1.0 + DEDUP_TOL) {
            return Err(Error::OutOfBox { value: bad });
        }
        out.push(q);
    }
    PointSet::new(set.dim(), out, set.kind())
}

/// Splits `set` into the full set (returned unchanged, as the interior node set
/// includes boundary nodes) and the subset lying on the box boundary.
pub fn boundary_subset(set: &PointSet) -> (PointSet, PointSet) {
    let boundary: Vec<Point> = set.iter().copied().filter(|p| p.on_box_boundary(DEDUP_TOL)).collect();
    let z = PointSet { dim: set.dim(), points: boundary, kind: PointKind::BoundaryOnly };
    (set.clone(), z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshMetrics {
    pub fill_h: f64,
    pub separation_q: f64,
    pub mesh_ratio_rho: f64,
}

/// Fill distance (over the closed box, or over the box boundary for
/// boundary-only sets), separation distance and mesh ratio.
pub fn mesh_metrics(set: &PointSet, probe_n: usize) -> Result<MeshMetrics> {
    if set.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if set.len() < 2 {
        return Err(Error::SingletonSeparation);
    }
    let fill_h = fill_distance(set, probe_n)?;
    let separation_q = separation_distance(set)?;
    Ok(MeshMetrics { fill_h, separation_q, mesh_ratio_rho: fill_h / separation_q })
}

/// Number of oversampled nodes `ceil(sqrt(gamma * n_x))^2`.
pub fn oversample_counts(gamma: f64, n_x: usize) -> Result<usize> {
    Ok(oversample_per_axis(gamma, n_x)?.pow(2))
}

/// Per-axis node count `ceil(sqrt(gamma * n_x))` of the oversampled grid.
pub fn oversample_per_axis(gamma: f64, n_x: usize) -> Result<usize> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(invalid(format!("oversampling ratio must be >= 1, got {gamma}")));
    }
    let target = gamma * n_x as f64;
    let mut k = target.sqrt().floor() as usize;
    // Guard against sqrt rounding on perfect squares.
    while ((k * k) as f64) < target * (1.0 - 1e-12) {
        k += 1;
    }
    while k > 0 && (((k - 1) * (k - 1)) as f64) >= target * (1.0 - 1e-12) {
        k -= 1;
    }
    Ok(k)
}

/// Euclidean closest point on the boundary of `[-1, 1]^d`.
///
/// Ties go to the face with the smallest axis index, and on that axis to the
/// `+1` face before the `-1` face.
pub fn closest_point_square(x: &Point) -> Point {
    let dim = x.dim();
    let mut best: Option<(f64, Point)> = None;
    for axis in 0..dim {
        for side in [1.0, -1.0] {
            let mut c = [0.0; MAX_DIM];
            for k in 0..dim {
                c[k] = if k == axis { side } else { x[k].clamp(-1.0, 1.0) };
            }
            let cand = Point::from_array(c, dim);
            let d = cand.dist2(x);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd - 1e-15) {
                best = Some((d, cand));
            }
        }
    }
    best.expect("dimension >= 1").1
}
