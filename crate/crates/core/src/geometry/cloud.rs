//! Seeded scattered clouds that are denser inside a strip around a hyperplane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::neighbors::DynamicGrid;
use super::point::{Point, MAX_DIM};
use super::PointSet;
use crate::error::{invalid, Error, Result};

/// Tuning knobs for [`scattered_cloud_near_line`].
#[derive(Clone, Copy, Debug)]
pub struct CloudOptions {
    /// Fraction of the points placed inside the strip.
    pub strip_fraction: f64,
    /// Minimum spacing as a multiple of the mean spacing `density^(-1/d)` of
    /// the point's region.
    pub spacing_factor: f64,
    /// Rejection attempts allowed per requested point.
    pub attempts_per_point: usize,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self { strip_fraction: 0.5, spacing_factor: 0.5, attempts_per_point: 400 }
    }
}

/// `n_target` points strictly inside the box, denser inside the strip
/// `|n . x| <= width / 2` around the hyperplane through the origin with normal
/// `line_normal`. Identical seeds give identical clouds.
pub fn scattered_cloud_near_line(
    n_target: usize,
    line_normal: &[f64],
    width: f64,
    seed: u64,
) -> Result<PointSet> {
    scattered_cloud_with(n_target, line_normal, width, seed, CloudOptions::default())
}

pub fn scattered_cloud_with(
    n_target: usize,
    line_normal: &[f64],
    width: f64,
    seed: u64,
    opts: CloudOptions,
) -> Result<PointSet> {
    let dim = line_normal.len();
    if n_target == 0 {
        return Err(invalid("cloud needs at least one point"));
    }
    if !(width > 0.0) {
        return Err(invalid(format!("strip width must be positive, got {width}")));
    }
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let norm = line_normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(invalid("line normal must be nonzero"));
    }
    let mut normal = [0.0; MAX_DIM];
    for k in 0..dim {
        normal[k] = line_normal[k] / norm;
    }
    let in_strip = |p: &Point| (0..dim).map(|k| normal[k] * p[k]).sum::<f64>().abs() <= 0.5 * width;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut c = [0.0; MAX_DIM];
        for v in c.iter_mut().take(dim) {
            *v = rng.random_range(-1.0..1.0);
        }
        Point::from_array(c, dim)
    };

    // Strip share of the box volume, estimated on a fixed stratified sample.
    let strip_share = {
        let mut est = ChaCha8Rng::seed_from_u64(0x5eed);
        let m = 20_000;
        let hits = (0..m).filter(|_| in_strip(&draw(&mut est))).count();
        (hits as f64 / m as f64).clamp(1e-3, 1.0)
    };
    let box_volume = 2f64.powi(dim as i32);
    let n_in = ((n_target as f64 * opts.strip_fraction).round() as usize).min(n_target);
    let n_out = n_target - n_in;
    let spacing = |count: usize, volume: f64| {
        if count == 0 {
            f64::INFINITY
        } else {
            opts.spacing_factor * (volume / count as f64).powf(1.0 / dim as f64)
        }
    };
    let s_in = spacing(n_in, strip_share * box_volume);
    let s_out = if strip_share >= 1.0 { s_in } else { spacing(n_out, (1.0 - strip_share) * box_volume) };

    let cell = s_in.min(s_out).max(1e-4);
    let mut grid = DynamicGrid::new(dim, cell);
    let budget = opts.attempts_per_point * n_target;
    let mut attempts = 0usize;
    for (want_in, count, s) in [(true, n_in, s_in), (false, n_out, s_out)] {
        let mut placed = 0;
        while placed < count {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Generation(format!(
                    "placed {} of {n_target} points within {budget} attempts",
                    grid.points.len()
                )));
            }
            let p = draw(&mut rng);
            if in_strip(&p) != want_in {
                continue;
            }
            let margin = 0.5 * s;
            if p.coords().iter().any(|c| c.abs() >= 1.0 - margin) {
                continue;
            }
            if grid.any_within(&p, s) {
                continue;
            }
            grid.push(p);
            placed += 1;
        }
    }
    PointSet::interior(dim, grid.points)
}
