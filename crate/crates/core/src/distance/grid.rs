use serde::{Deserialize, Serialize};

use crate::fields::{ChartManifold, Point, Vector, Winding, DIM};

/// Neighbor stencil: offsets `(di, dj)` with `max(|di|, |dj|) ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Stencil {
    S8,
    S16,
    S32,
}

const S8: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

const S16: [(i32, i32); 16] = [
    (1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1),
    (-1, 0), (-2, -1), (-1, -1), (-1, -2), (0, -1), (1, -2), (1, -1), (2, -1),
];

const S32: [(i32, i32); 32] = [
    (1, 0), (3, 1), (2, 1), (3, 2), (1, 1), (2, 3), (1, 2), (1, 3),
    (0, 1), (-1, 3), (-1, 2), (-2, 3), (-1, 1), (-3, 2), (-2, 1), (-3, 1),
    (-1, 0), (-3, -1), (-2, -1), (-3, -2), (-1, -1), (-2, -3), (-1, -2), (-1, -3),
    (0, -1), (1, -3), (1, -2), (2, -3), (1, -1), (3, -2), (2, -1), (3, -1),
];

impl Stencil {
    pub fn size(self) -> usize {
        match self {
            Stencil::S8 => 8,
            Stencil::S16 => 16,
            Stencil::S32 => 32,
        }
    }

    /// Offsets in counterclockwise order starting at `(1, 0)`.
    pub fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Stencil::S8 => &S8,
            Stencil::S16 => &S16,
            Stencil::S32 => &S32,
        }
    }

    /// Worst-case relative overestimate of Euclidean length by paths made
    /// of two adjacent stencil directions: `1/cos(gap/2) − 1`.
    pub fn anisotropy(self) -> f64 {
        let mut angles: Vec<f64> = self.offsets().iter().map(|&(i, j)| (j as f64).atan2(i as f64)).collect();
        angles.sort_by(f64::total_cmp);
        let mut gap: f64 = 0.0;
        for k in 0..angles.len() {
            let next = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + std::f64::consts::TAU };
            gap = gap.max(next - angles[k]);
        }
        1.0 / (0.5 * gap).cos() - 1.0
    }
}

impl TryFrom<usize> for Stencil {
    type Error = String;

    fn try_from(n: usize) -> Result<Self, String> {
        match n {
            8 => Ok(Stencil::S8),
            16 => Ok(Stencil::S16),
            32 => Ok(Stencil::S32),
            other => Err(format!("stencil must be 8, 16 or 32, got {other}")),
        }
    }
}

impl From<Stencil> for usize {
    fn from(s: Stencil) -> usize {
        s.size()
    }
}

/// `N × N` nodes over the chart. Periodic axes place nodes at `lo + i·ext/N`;
/// bounded axes include both ends, `lo + i·ext/(N−1)`. Node index is `i + N·j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    chart: ChartManifold,
    n: usize,
    step: [f64; DIM],
}

impl Grid {
    pub fn new(chart: ChartManifold, n: usize) -> Self {
        let mut step = [0.0; DIM];
        for (axis, s) in step.iter_mut().enumerate() {
            let cells = if chart.is_periodic(axis) { n } else { n - 1 };
            *s = chart.extent(axis) / cells as f64;
        }
        Self { chart, n, step }
    }

    pub fn chart(&self) -> &ChartManifold {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn step(&self) -> [f64; DIM] {
        self.step
    }

    /// Largest cell side.
    pub fn cell(&self) -> f64 {
        self.step[0].max(self.step[1])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n * j
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        let lo = self.chart.lo();
        Point::new(lo[0] + i as f64 * self.step[0], lo[1] + j as f64 * self.step[1])
    }

    /// Displacement of a stencil offset.
    pub fn displacement(&self, off: (i32, i32)) -> Vector {
        Vector::new(off.0 as f64 * self.step[0], off.1 as f64 * self.step[1])
    }

    /// Node reached by `off`, and the periods crossed; `None` across a
    /// bounded edge of the chart.
    pub fn neighbor(&self, idx: usize, off: (i32, i32)) -> Option<(usize, Winding)> {
        let (i, j) = self.coords(idx);
        let mut w = [0i64; DIM];
        let mut out = [0usize; DIM];
        for (axis, (c, d)) in [(i, off.0), (j, off.1)].into_iter().enumerate() {
            let raw = c as i64 + d as i64;
            let n = self.n as i64;
            if self.chart.is_periodic(axis) {
                w[axis] = raw.div_euclid(n);
                out[axis] = raw.rem_euclid(n) as usize;
            } else if raw < 0 || raw >= n {
                return None;
            } else {
                out[axis] = raw as usize;
            }
        }
        Some((self.index(out[0], out[1]), w))
    }

    /// Nearest node to a chart point (wrapped on periodic axes).
    pub fn nearest(&self, p: &Point) -> usize {
        let q = self.chart.wrap(p);
        let lo = self.chart.lo();
        let mut c = [0usize; DIM];
        for axis in 0..DIM {
            let r = ((q[axis] - lo[axis]) / self.step[axis]).round() as i64;
            let n = self.n as i64;
            c[axis] = if self.chart.is_periodic(axis) { r.rem_euclid(n) } else { r.clamp(0, n - 1) } as usize;
        }
        self.index(c[0], c[1])
    }

    /// Minimal lattice offset between two nodes (periodic axes wrap).
    pub fn lattice_offset(&self, a: usize, b: usize) -> (i64, i64) {
        let (ai, aj) = self.coords(a);
        let (bi, bj) = self.coords(b);
        let n = self.n as i64;
        let fold = |d: i64, axis: usize| {
            if self.chart.is_periodic(axis) {
                let d = d.rem_euclid(n);
                if d > n / 2 {
                    d - n
                } else {
                    d
                }
            } else {
                d
            }
        };
        (fold(bi as i64 - ai as i64, 0), fold(bj as i64 - aj as i64, 1))
    }

    /// Chebyshev distance in cells between two nodes.
    pub fn cell_distance(&self, a: usize, b: usize) -> u64 {
        let (di, dj) = self.lattice_offset(a, b);
        di.unsigned_abs().max(dj.unsigned_abs())
    }

    /// Whether the node sits on a bounded edge of the chart.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        [(i, 0), (j, 1)]
            .into_iter()
            .any(|(c, axis)| !self.chart.is_periodic(axis) && (c == 0 || c == self.n - 1))
    }

    /// Nodes within `cells` (Chebyshev) of the chart boundary.
    pub fn boundary_distance(&self, idx: usize) -> usize {
        let (i, j) = self.coords(idx);
        let mut d = usize::MAX;
        for (c, axis) in [(i, 0), (j, 1)] {
            if !self.chart.is_periodic(axis) {
                d = d.min(c).min(self.n - 1 - c);
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_symmetric_and_ordered() {
        for s in [Stencil::S8, Stencil::S16, Stencil::S32] {
            let offs = s.offsets();
            assert_eq!(offs.len(), s.size());
            for &(i, j) in offs {
                assert!(offs.contains(&(-i, -j)));
            }
            let angles: Vec<f64> = offs.iter().map(|&(i, j)| (j as f64).atan2(i as f64).rem_euclid(std::f64::consts::TAU)).collect();
            assert!(angles.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn anisotropy_of_stencils() {
        assert!((Stencil::S8.anisotropy() - 0.0824).abs() < 1e-4);
        assert!((Stencil::S16.anisotropy() - 0.0275).abs() < 1e-4);
        assert!((Stencil::S32.anisotropy() - 0.0131).abs() < 1e-4);
    }

    #[test]
    fn neighbors_wrap_with_winding() {
        let g = Grid::new(ChartManifold::unit_torus(), 8);
        let idx = g.index(7, 0);
        assert_eq!(g.neighbor(idx, (1, -1)), Some((g.index(0, 7), [1, -1])));
        let p = Grid::new(ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap(), 8);
        assert_eq!(p.neighbor(p.index(7, 3), (1, 0)), None);
        assert!((p.point(p.index(7, 7)) - Point::new(1.0, 1.0)).norm() < 1e-15);
        assert_eq!(g.nearest(&Point::new(0.99, 0.5)), g.index(0, 4));
        assert_eq!(g.lattice_offset(g.index(7, 0), g.index(0, 0)), (1, 0));
    }
}
