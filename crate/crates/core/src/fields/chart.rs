use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dimension of the coordinate chart.
pub const DIM: usize = 2;

pub type Point = Vector2<f64>;
pub type Vector = Vector2<f64>;
pub type Covector = Vector2<f64>;
pub type Sym2 = Matrix2<f64>;
/// Integer number of fundamental periods crossed along each axis.
pub type Winding = [i64; DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("axis {axis}: bounds [{lo}, {hi}] have no positive extent")]
    EmptyAxis { axis: usize, lo: f64, hi: f64 },
    #[error("point ({x}, {y}) lies outside the chart on non-periodic axis {axis}")]
    OutsideChart { x: f64, y: f64, axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A rectangular coordinate chart, optionally with periodic identifications
/// along some axes (plane, cylinder or flat torus).
#[derive(Debug, Clone, PartialEq)]
pub struct ChartManifold {
    bounds: [Interval; DIM],
    periodic: [bool; DIM],
}

// Slack for boundary membership tests on non-periodic axes.
const BOUNDS_SLACK: f64 = 1e-12;

impl ChartManifold {
    pub fn new(bounds: [Interval; DIM], periodic: [bool; DIM]) -> Result<Self, DomainError> {
        for (axis, b) in bounds.iter().enumerate() {
            if !(b.hi - b.lo > 0.0) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(DomainError::EmptyAxis { axis, lo: b.lo, hi: b.hi });
            }
        }
        Ok(Self { bounds, periodic })
    }

    pub fn plane(x: (f64, f64), y: (f64, f64)) -> Result<Self, DomainError> {
        Self::new([Interval::new(x.0, x.1), Interval::new(y.0, y.1)], [false, false])
    }

    pub fn torus(x: (f64, f64), y: (f64, f64)) -> Result<Self, DomainError> {
        Self::new([Interval::new(x.0, x.1), Interval::new(y.0, y.1)], [true, true])
    }

    /// Cylinder periodic in the first axis.
    pub fn cylinder(x: (f64, f64), y: (f64, f64)) -> Result<Self, DomainError> {
        Self::new([Interval::new(x.0, x.1), Interval::new(y.0, y.1)], [true, false])
    }

    pub fn unit_torus() -> Self {
        Self::torus((0.0, 1.0), (0.0, 1.0)).expect("unit torus is valid")
    }

    pub fn bounds(&self) -> &[Interval; DIM] {
        &self.bounds
    }

    pub fn periodic(&self) -> [bool; DIM] {
        self.periodic
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn has_periodic_axis(&self) -> bool {
        self.periodic.iter().any(|&p| p)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.bounds[axis].extent()
    }

    pub fn lo(&self) -> Point {
        Point::new(self.bounds[0].lo, self.bounds[1].lo)
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.bounds[0].lo + self.bounds[0].hi),
            0.5 * (self.bounds[1].lo + self.bounds[1].hi),
        )
    }

    /// Coordinate diameter of the fundamental domain.
    pub fn diameter(&self) -> f64 {
        (self.extent(0).powi(2) + self.extent(1).powi(2)).sqrt()
    }

    /// Default finite-difference step along `axis`.
    pub fn fd_step(&self, axis: usize) -> f64 {
        1e-5 * self.extent(axis)
    }

    /// Displacement produced by a winding vector (zero on non-periodic axes).
    pub fn period_vector(&self, winding: Winding) -> Vector {
        let mut v = Vector::zeros();
        for axis in 0..DIM {
            if self.periodic[axis] {
                v[axis] = winding[axis] as f64 * self.extent(axis);
            }
        }
        v
    }

    fn wrap_axis(&self, axis: usize, x: f64) -> (f64, i64) {
        let b = self.bounds[axis];
        let ext = b.extent();
        let shifted = x - b.lo;
        let k = (shifted / ext).floor();
        let mut r = shifted - k * ext;
        let mut k = k as i64;
        if r >= ext {
            r -= ext;
            k += 1;
        }
        if r < 0.0 {
            r = 0.0;
        }
        (b.lo + r, k)
    }

    /// Wraps periodic coordinates into `[lo, hi)`; other axes are untouched.
    pub fn wrap(&self, p: &Point) -> Point {
        self.wrap_with_winding(p).0
    }

    /// Wraps a point and returns how many periods were removed per axis.
    pub fn wrap_with_winding(&self, p: &Point) -> (Point, Winding) {
        let mut out = *p;
        let mut w = [0i64; DIM];
        for axis in 0..DIM {
            if self.periodic[axis] {
                let (x, k) = self.wrap_axis(axis, p[axis]);
                out[axis] = x;
                w[axis] = k;
            }
        }
        (out, w)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..DIM).all(|axis| {
            self.periodic[axis] || {
                let b = self.bounds[axis];
                let slack = BOUNDS_SLACK * b.extent();
                p[axis] >= b.lo - slack && p[axis] <= b.hi + slack
            }
        })
    }

    pub fn check_contains(&self, p: &Point) -> Result<(), DomainError> {
        for axis in 0..DIM {
            if !self.periodic[axis] {
                let b = self.bounds[axis];
                let slack = BOUNDS_SLACK * b.extent();
                if p[axis] < b.lo - slack || p[axis] > b.hi + slack || !p[axis].is_finite() {
                    return Err(DomainError::OutsideChart { x: p[0], y: p[1], axis });
                }
            }
        }
        Ok(())
    }

    /// Minimal displacement from `a` to `b`. On periodic axes the returned
    /// vector equals `b - a + winding * extent` with the smallest magnitude.
    pub fn wrap_displacement(&self, a: &Point, b: &Point) -> Result<(Vector, Winding), DomainError> {
        self.check_contains(a)?;
        self.check_contains(b)?;
        let a = self.wrap(a);
        let b = self.wrap(b);
        let mut d = b - a;
        let mut w = [0i64; DIM];
        for axis in 0..DIM {
            if self.periodic[axis] {
                let ext = self.extent(axis);
                let k = -(d[axis] / ext).round();
                let mut shifted = d[axis] + k * ext;
                let mut k = k as i64;
                // representative in [-ext/2, ext/2)
                if shifted >= 0.5 * ext {
                    shifted -= ext;
                    k -= 1;
                }
                d[axis] = shifted;
                w[axis] = k;
            }
        }
        Ok((d, w))
    }
}

pub fn winding_add(a: Winding, b: Winding) -> Winding {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn winding_neg(a: Winding) -> Winding {
    [-a[0], -a[1]]
}

pub fn winding_is_zero(a: Winding) -> bool {
    a.iter().all(|&k| k == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn torus_displacement_wraps_across_seam() {
        let m = ChartManifold::unit_torus();
        let (d, w) = m
            .wrap_displacement(&Point::new(0.9, 0.5), &Point::new(0.1, 0.5))
            .unwrap();
        assert!((d - Vector::new(0.2, 0.0)).norm() < 1e-12);
        assert_eq!(w, [1, 0]);
    }

    #[test]
    fn plane_displacement_is_identity() {
        let m = ChartManifold::plane((0.0, 5.0), (0.0, 5.0)).unwrap();
        let (d, w) = m
            .wrap_displacement(&Point::new(0.0, 0.0), &Point::new(3.0, 4.0))
            .unwrap();
        assert_eq!(d, Vector::new(3.0, 4.0));
        assert_eq!(w, [0, 0]);
    }

    #[test]
    fn zero_displacement() {
        let m = ChartManifold::unit_torus();
        let p = Point::new(0.3, 0.3);
        let (d, w) = m.wrap_displacement(&p, &p).unwrap();
        assert_eq!(d, Vector::zeros());
        assert_eq!(w, [0, 0]);
    }

    #[test]
    fn outside_non_periodic_axis_is_domain_error() {
        let m = ChartManifold::cylinder((0.0, 1.0), (0.0, 1.0)).unwrap();
        let err = m
            .wrap_displacement(&Point::new(0.5, 0.5), &Point::new(0.5, 1.5))
            .unwrap_err();
        assert!(matches!(err, DomainError::OutsideChart { axis: 1, .. }));
        // periodic axis accepts anything
        assert!(m.wrap_displacement(&Point::new(7.2, 0.5), &Point::new(-3.1, 0.2)).is_ok());
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(ChartManifold::plane((1.0, 1.0), (0.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let m = ChartManifold::torus((-0.5, 1.5), (0.0, 3.0)).unwrap();
            let once = m.wrap(&Point::new(x, y));
            let twice = m.wrap(&once);
            prop_assert_eq!(once, twice);
            prop_assert!(once[0] >= -0.5 && once[0] < 1.5);
            prop_assert!(once[1] >= 0.0 && once[1] < 3.0);
        }

        #[test]
        fn winding_is_additive_along_segments(
            ax in 0.0f64..1.0, ay in 0.0f64..1.0,
            dx1 in -0.45f64..0.45, dy1 in -0.45f64..0.45,
            dx2 in -0.45f64..0.45, dy2 in -0.45f64..0.45,
        ) {
            // lifted path a -> b -> c with short legs: the wrap windings of
            // the endpoints compose additively
            let m = ChartManifold::unit_torus();
            let a = Point::new(ax, ay);
            let b = a + Vector::new(dx1, dy1);
            let c = b + Vector::new(dx2, dy2);
            let (_, wa) = m.wrap_with_winding(&a);
            let (_, wb) = m.wrap_with_winding(&b);
            let (_, wc) = m.wrap_with_winding(&c);
            let leg1 = [wb[0] - wa[0], wb[1] - wa[1]];
            let leg2 = [wc[0] - wb[0], wc[1] - wb[1]];
            prop_assert_eq!(winding_add(leg1, leg2), [wc[0] - wa[0], wc[1] - wa[1]]);
            // the minimal displacement reproduces the leg up to the winding shift
            let (d, w) = m.wrap_displacement(&m.wrap(&a), &m.wrap(&b)).unwrap();
            prop_assert!((d - (b - a)).norm() < 1e-9);
            prop_assert_eq!(w, leg1);
        }
    }
}
