//! Fill and separation distances.
//!
//! The fill distance is the supremum over the domain of the distance to the
//! nearest set point. It is measured on a `probe_n`-per-axis tensor grid and
//! then sharpened by branch and bound: the nearest-point distance is
//! 1-Lipschitz, so a probe cell whose centre value plus half-diagonal cannot
//! beat the current maximum is discarded, and every other cell is split.

use std::collections::BinaryHeap;

use super::neighbors::NeighborGrid;
use super::point::{Point, MAX_DIM};
use super::{PointKind, PointSet};
use crate::error::{invalid, Error, Result};

/// Relative resolution of the branch-and-bound refinement.
const REFINE_RTOL: f64 = 1e-7;

/// An axis-aligned box; some axes may be degenerate (faces of the cube).
#[derive(Clone, Copy)]
struct Cell {
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    bound: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.bound == o.bound
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.bound.total_cmp(&o.bound)
    }
}

fn center(lo: &[f64; MAX_DIM], hi: &[f64; MAX_DIM], dim: usize) -> Point {
    let mut c = [0.0; MAX_DIM];
    for k in 0..dim {
        c[k] = 0.5 * (lo[k] + hi[k]);
    }
    Point::from_array(c, dim)
}

fn half_diag(lo: &[f64; MAX_DIM], hi: &[f64; MAX_DIM], dim: usize) -> f64 {
    (0..dim).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt() * 0.5
}

/// Fill distance of `set` over the closed box, or over the box boundary when
/// the set is boundary-only.
pub fn fill_distance(set: &PointSet, probe_n: usize) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if probe_n < 2 {
        return Err(invalid("probe_n must be at least 2"));
    }
    let dim = set.dim();
    let grid = NeighborGrid::new(set.points());
    let dist = |p: &Point| grid.nearest(p, None).map_or(f64::INFINITY, |(_, d)| d);

    // Domain pieces: the full box, or its 2d faces.
    let mut pieces: Vec<([f64; MAX_DIM], [f64; MAX_DIM])> = Vec::new();
    let mut full_lo = [0.0; MAX_DIM];
    let mut full_hi = [0.0; MAX_DIM];
    for k in 0..dim {
        full_lo[k] = -1.0;
        full_hi[k] = 1.0;
    }
    match set.kind() {
        PointKind::InteriorOrMixed => pieces.push((full_lo, full_hi)),
        PointKind::BoundaryOnly => {
            for axis in 0..dim {
                for side in [-1.0, 1.0] {
                    let (mut lo, mut hi) = (full_lo, full_hi);
                    lo[axis] = side;
                    hi[axis] = side;
                    pieces.push((lo, hi));
                }
            }
        }
    }

    let mut best = 0.0_f64;
    let mut heap = BinaryHeap::new();
    for (lo, hi) in pieces {
        let free: Vec<usize> = (0..dim).filter(|&k| hi[k] > lo[k]).collect();
        let cells_per_axis = probe_n - 1;
        let ncells = cells_per_axis.pow(free.len() as u32);
        let step = 2.0 / cells_per_axis as f64;
        for flat in 0..ncells {
            let (mut clo, mut chi) = (lo, hi);
            let mut rem = flat;
            for &k in &free {
                let i = rem % cells_per_axis;
                rem /= cells_per_axis;
                clo[k] = -1.0 + step * i as f64;
                chi[k] = if i + 1 == cells_per_axis { 1.0 } else { -1.0 + step * (i + 1) as f64 };
            }
            // Probe at the cell corners nearest the lower-left and at the centre.
            let corner = Point::from_array(clo, dim);
            best = best.max(dist(&corner));
            let c = center(&clo, &chi, dim);
            let v = dist(&c);
            best = best.max(v);
            let bound = v + half_diag(&clo, &chi, dim);
            if bound > best * (1.0 + REFINE_RTOL) {
                heap.push(Cell { lo: clo, hi: chi, bound });
            }
        }
        // Upper faces of the probe lattice are not corners of any cell above.
        let far = Point::from_array(hi, dim);
        best = best.max(dist(&far));
    }

    while let Some(cell) = heap.pop() {
        if cell.bound <= best * (1.0 + REFINE_RTOL) {
            break;
        }
        let free: Vec<usize> = (0..dim).filter(|&k| cell.hi[k] > cell.lo[k]).collect();
        let nchild = 1usize << free.len();
        for mask in 0..nchild {
            let (mut lo, mut hi) = (cell.lo, cell.hi);
            for (bit, &k) in free.iter().enumerate() {
                let mid = 0.5 * (cell.lo[k] + cell.hi[k]);
                if mask >> bit & 1 == 0 {
                    hi[k] = mid;
                } else {
                    lo[k] = mid;
                }
            }
            let c = center(&lo, &hi, dim);
            let v = dist(&c);
            best = best.max(v);
            let bound = v + half_diag(&lo, &hi, dim);
            if bound > best * (1.0 + REFINE_RTOL) {
                heap.push(Cell { lo, hi, bound });
            }
        }
    }
    Ok(best)
}

/// Brute-force fill distance over the probe points of a `probe_n`-per-axis
/// grid on the closed box that satisfy `region`.
pub fn fill_distance_where(set: &PointSet, probe_n: usize, region: impl Fn(&Point) -> bool) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let probes = super::tensor_grid(probe_n, set.dim())?;
    let grid = NeighborGrid::new(set.points());
    Ok(probes
        .iter()
        .filter(|p| region(p))
        .filter_map(|p| grid.nearest(p, None).map(|(_, d)| d))
        .fold(0.0, f64::max))
}

/// Half the minimum distance between two distinct points of the set.
pub fn separation_distance(set: &PointSet) -> Result<f64> {
    match set.len() {
        0 => return Err(Error::EmptyPointSet),
        1 => return Err(Error::SingletonSeparation),
        _ => {}
    }
    let grid = NeighborGrid::new(set.points());
    let min = set
        .iter()
        .enumerate()
        .filter_map(|(i, p)| grid.nearest(p, Some(i)).map(|(_, d)| d))
        .fold(f64::INFINITY, f64::min);
    Ok(0.5 * min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_transform, boundary_subset, mesh_metrics, tensor_grid, TransformKind};

    /// Plain maximum over a probe grid, no refinement.
    fn probe_only_fill(set: &PointSet, probe_n: usize) -> f64 {
        fill_distance_where(set, probe_n, |_| true).unwrap()
    }

    #[test]
    fn regular_grid_metrics() {
        for n in [3, 5, 9, 17] {
            let g = tensor_grid(n, 2).unwrap();
            let s = 2.0 / (n - 1) as f64;
            let m = mesh_metrics(&g, 64).unwrap();
            assert!((m.separation_q - s / 2.0).abs() < 1e-14);
            assert!((m.fill_h - s / 2f64.sqrt()).abs() < 1e-6 * s, "n={n} h={}", m.fill_h);
            assert!((m.mesh_ratio_rho - 2f64.sqrt()).abs() < 1e-5);
        }
    }

    #[test]
    fn center_point_fill() {
        let one = PointSet::interior(2, vec![Point::new2(0.0, 0.0)]).unwrap();
        assert!((fill_distance(&one, 64).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn refinement_dominates_probe_and_is_close() {
        // Frozen against a 2048^2 probe-only oracle below.
        let g = apply_transform(&TransformKind::Sine, &tensor_grid(5, 2).unwrap()).unwrap();
        let coarse = probe_only_fill(&g, 512);
        let fine = probe_only_fill(&g, 2049);
        let refined = fill_distance(&g, 64).unwrap();
        assert!(refined >= fine - 1e-12);
        assert!(refined - fine < 2.0 / 2048.0);
        assert!(refined >= coarse - 1e-12);
    }

    #[test]
    fn boundary_fill_uses_faces_only() {
        let (_, z) = boundary_subset(&tensor_grid(5, 2).unwrap());
        // Consecutive boundary nodes are 0.5 apart along each edge.
        let h = fill_distance(&z, 64).unwrap();
        assert!((h - 0.25).abs() < 1e-7, "h = {h}");
    }

    #[test]
    fn three_dimensional_grid() {
        let g = tensor_grid(3, 3).unwrap();
        let h = fill_distance(&g, 16).unwrap();
        assert!((h - 3f64.sqrt() / 2.0).abs() < 1e-6);
    }
}
