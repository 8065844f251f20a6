use std::fmt;

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// Two points closer than this are considered the same point.
pub const DEDUP_TOL: f64 = 1e-12;

/// A point in `[-1, 1]^d` for `d <= 3`. Unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(coords);
        Ok(Self { coords: c, dim: dim as u8 })
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Self { coords: [x, y, 0.0], dim: 2 }
    }

    /// Builds a point without validation. `coords` beyond `dim` must be zero.
    pub(crate) fn from_array(coords: [f64; MAX_DIM], dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        Self { coords, dim: dim as u8 }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let a = &self.coords;
        let b = &other.coords;
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.coords().iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// True when the point lies on the boundary of `[-1, 1]^d` within `tol`.
    pub fn on_box_boundary(&self, tol: f64) -> bool {
        (self.max_norm() - 1.0).abs() <= tol
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Point {
        let mut c = [0.0; MAX_DIM];
        for (o, &v) in c.iter_mut().zip(self.coords()) {
            *o = f(v);
        }
        Point::from_array(c, self.dim())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point{:?}", self.coords())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}
