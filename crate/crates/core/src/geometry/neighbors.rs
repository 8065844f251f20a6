//! Uniform bucket grid for nearest-neighbour and radius queries.

use super::point::{Point, MAX_DIM};

pub struct NeighborGrid<'a> {
    points: &'a [Point],
    dim: usize,
    lo: [f64; MAX_DIM],
    cell: f64,
    shape: [usize; MAX_DIM],
    /// CSR layout: `starts[c]..starts[c + 1]` indexes into `items`.
    starts: Vec<usize>,
    items: Vec<u32>,
}

impl<'a> NeighborGrid<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        let dim = points.first().map_or(1, Point::dim);
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..dim {
            lo[k] = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            hi[k] = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            if !lo[k].is_finite() {
                lo[k] = -1.0;
                hi[k] = 1.0;
            }
        }
        let extent = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0_f64, f64::max).max(1e-9);
        // About two points per cell for quasi-uniform sets.
        let per_axis = ((points.len() as f64 / 2.0).powf(1.0 / dim as f64)).ceil().max(1.0);
        let cell = extent / per_axis;
        let mut shape = [1usize; MAX_DIM];
        for k in 0..dim {
            shape[k] = (((hi[k] - lo[k]) / cell).floor() as usize + 1).min(1 << 20);
        }
        let ncells: usize = shape.iter().product();

        let mut grid = Self {
            points,
            dim,
            lo,
            cell,
            shape,
            starts: vec![0; ncells + 1],
            items: vec![0; points.len()],
        };
        let ids: Vec<usize> = points.iter().map(|p| grid.flat(&grid.cell_of(p))).collect();
        for &c in &ids {
            grid.starts[c + 1] += 1;
        }
        for c in 0..ncells {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in ids.iter().enumerate() {
            grid.items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    /// Cell containing `p`, clamped into the grid. Cells at Chebyshev index
    /// distance `ring + 1` from it are still at least `ring * cell` from `p`.
    fn cell_of(&self, p: &Point) -> [i64; MAX_DIM] {
        let mut c = [0i64; MAX_DIM];
        for k in 0..self.dim {
            let raw = ((p[k] - self.lo[k]) / self.cell).floor();
            c[k] = raw.clamp(0.0, (self.shape[k] - 1) as f64) as i64;
        }
        c
    }

    fn flat(&self, c: &[i64; MAX_DIM]) -> usize {
        let mut idx = 0usize;
        for k in (0..self.dim).rev() {
            let ck = c[k].clamp(0, self.shape[k] as i64 - 1) as usize;
            idx = idx * self.shape[k] + ck;
        }
        idx
    }

    fn in_range(&self, c: &[i64; MAX_DIM]) -> bool {
        (0..self.dim).all(|k| c[k] >= 0 && c[k] < self.shape[k] as i64)
    }

    fn bucket(&self, c: &[i64; MAX_DIM]) -> &[u32] {
        let f = self.flat(c);
        &self.items[self.starts[f]..self.starts[f + 1]]
    }

    /// Visits every in-range cell at Chebyshev index distance exactly `ring` from `center`.
    fn for_ring(&self, center: &[i64; MAX_DIM], ring: i64, mut f: impl FnMut(&[u32])) {
        let r = ring;
        let mut c = [0i64; MAX_DIM];
        match self.dim {
            1 => {
                for dx in [-r, r] {
                    c[0] = center[0] + dx;
                    if self.in_range(&c) {
                        f(self.bucket(&c));
                    }
                    if r == 0 {
                        break;
                    }
                }
            }
            2 => {
                for dx in -r..=r {
                    let edge = dx.abs() == r;
                    let mut dy = -r;
                    while dy <= r {
                        c[0] = center[0] + dx;
                        c[1] = center[1] + dy;
                        if self.in_range(&c) {
                            f(self.bucket(&c));
                        }
                        dy += if edge || r == 0 { 1 } else { 2 * r };
                    }
                }
            }
            _ => {
                for dx in -r..=r {
                    for dy in -r..=r {
                        let shell = dx.abs() == r || dy.abs() == r;
                        let mut dz = -r;
                        while dz <= r {
                            c[0] = center[0] + dx;
                            c[1] = center[1] + dy;
                            c[2] = center[2] + dz;
                            if self.in_range(&c) {
                                f(self.bucket(&c));
                            }
                            dz += if shell || r == 0 { 1 } else { 2 * r };
                        }
                    }
                }
            }
        }
    }

    fn max_ring(&self, center: &[i64; MAX_DIM]) -> i64 {
        (0..self.dim)
            .map(|k| center[k].abs().max((center[k] - self.shape[k] as i64 + 1).abs()))
            .max()
            .unwrap_or(0)
    }

    /// Index and distance of the nearest point, skipping `exclude`.
    pub fn nearest(&self, q: &Point, exclude: Option<usize>) -> Option<(usize, f64)> {
        let center = self.cell_of(q);
        let max_ring = self.max_ring(&center);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = 0;
        while ring <= max_ring {
            self.for_ring(&center, ring, |items| {
                for &i in items {
                    let i = i as usize;
                    if Some(i) == exclude {
                        continue;
                    }
                    let d2 = q.dist2(&self.points[i]);
                    if d2 < best.1 {
                        best = (i, d2);
                    }
                }
            });
            // Cells at ring + 1 are at least `ring * cell` away.
            let reach = ring as f64 * self.cell;
            if best.1 <= reach * reach {
                break;
            }
            ring += 1;
        }
        (best.0 != usize::MAX).then(|| (best.0, best.1.sqrt()))
    }

    /// True if some point other than `exclude` lies within distance `r` of `q`.
    pub fn any_within(&self, q: &Point, r: f64, exclude: Option<usize>) -> bool {
        let center = self.cell_of(q);
        let rings = (r / self.cell).ceil() as i64 + 1;
        let r2 = r * r;
        let mut found = false;
        for ring in 0..=rings.min(self.max_ring(&center)) {
            self.for_ring(&center, ring, |items| {
                if found {
                    return;
                }
                found = items
                    .iter()
                    .any(|&i| Some(i as usize) != exclude && q.dist2(&self.points[i as usize]) <= r2);
            });
            if found {
                return true;
            }
        }
        false
    }
}

/// Incrementally grown point collection with a fixed-size bucket grid, used by
/// rejection samplers that must test spacing against already accepted points.
pub(crate) struct DynamicGrid {
    cell: f64,
    per_axis: usize,
    dim: usize,
    buckets: Vec<Vec<u32>>,
    pub(crate) points: Vec<Point>,
}

impl DynamicGrid {
    /// Grid covering `[-1, 1]^dim` with the given cell size.
    pub fn new(dim: usize, cell: f64) -> Self {
        let per_axis = ((2.0 / cell).ceil() as usize).clamp(1, 4096);
        let cell = 2.0 / per_axis as f64;
        Self {
            cell,
            per_axis,
            dim,
            buckets: vec![Vec::new(); per_axis.pow(dim as u32)],
            points: Vec::new(),
        }
    }

    fn coord(&self, v: f64) -> i64 {
        (((v + 1.0) / self.cell).floor() as i64).clamp(0, self.per_axis as i64 - 1)
    }

    fn flat(&self, c: &[i64; MAX_DIM]) -> usize {
        let mut idx = 0usize;
        for k in (0..self.dim).rev() {
            idx = idx * self.per_axis + c[k] as usize;
        }
        idx
    }

    pub fn any_within(&self, q: &Point, r: f64) -> bool {
        let reach = (r / self.cell).ceil() as i64;
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for k in 0..self.dim {
            let c = self.coord(q[k]);
            lo[k] = (c - reach).max(0);
            hi[k] = (c + reach).min(self.per_axis as i64 - 1);
        }
        let r2 = r * r;
        let mut c = [0i64; MAX_DIM];
        let z_range = if self.dim == 3 { lo[2]..=hi[2] } else { 0..=0 };
        let y_range = if self.dim >= 2 { lo[1]..=hi[1] } else { 0..=0 };
        for cz in z_range {
            for cy in y_range.clone() {
                for cx in lo[0]..=hi[0] {
                    c[0] = cx;
                    c[1] = cy;
                    c[2] = cz;
                    let b = &self.buckets[self.flat(&c)];
                    if b.iter().any(|&i| q.dist2(&self.points[i as usize]) <= r2) {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn push(&mut self, p: Point) {
        let mut c = [0i64; MAX_DIM];
        for k in 0..self.dim {
            c[k] = self.coord(p[k]);
        }
        let f = self.flat(&c);
        self.buckets[f].push(self.points.len() as u32);
        self.points.push(p);
    }
}
