use thiserror::Error;

use super::chart::{winding_add, winding_neg, ChartManifold, Point, Vector, Winding};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve needs at least two samples")]
    TooShort,
    #[error("curve parameters must increase strictly (sample {index})")]
    NonIncreasing { index: usize },
    #[error("F-affine reparametrization undefined: F(velocity) = {value} at sample {index}")]
    DegenerateSpeed { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    /// Lifted (unwrapped) coordinates.
    pub point: Point,
    pub velocity: Vector,
}

/// A sampled curve in lifted coordinates. `winding` counts periods crossed
/// between the first and last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    samples: Vec<CurveSample>,
    pub winding: Winding,
    pub closed: bool,
}

impl Curve {
    pub fn new(samples: Vec<CurveSample>, winding: Winding, closed: bool) -> Result<Self, CurveError> {
        if samples.len() < 2 {
            return Err(CurveError::TooShort);
        }
        if let Some(index) = samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(CurveError::NonIncreasing { index: index + 1 });
        }
        Ok(Self { samples, winding, closed })
    }

    /// Curve with winding inferred from the lifted endpoints.
    pub fn open_in(chart: &ChartManifold, samples: Vec<CurveSample>) -> Result<Self, CurveError> {
        let w = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => lifted_winding(chart, &a.point, &b.point),
            _ => [0, 0],
        };
        Self::new(samples, w, false)
    }

    /// Straight segment `a → a + d` sampled at `n + 1` points on `[0, 1]`.
    pub fn segment(a: Point, d: Vector, n: usize) -> Self {
        let n = n.max(1);
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                CurveSample { t, point: a + d * t, velocity: d }
            })
            .collect();
        Self { samples, winding: [0, 0], closed: false }
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> &CurveSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &CurveSample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn span(&self) -> f64 {
        self.end().t - self.start().t
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.samples.iter().map(|s| s.point)
    }

    /// Same point set traversed backwards: velocities negate, winding negates.
    pub fn reversed(&self) -> Self {
        let (t0, t1) = (self.start().t, self.end().t);
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| CurveSample { t: t0 + t1 - s.t, point: s.point, velocity: -s.velocity })
            .collect();
        Self { samples, winding: winding_neg(self.winding), closed: self.closed }
    }

    /// Appends `other`, translated so that it starts where `self` ends and
    /// its parameter continues from `self`'s final parameter.
    pub fn concat(&self, other: &Self) -> Self {
        let shift_t = self.end().t - other.start().t;
        let shift_p = self.end().point - other.start().point;
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().skip(1).map(|s| CurveSample {
            t: s.t + shift_t,
            point: s.point + shift_p,
            velocity: s.velocity,
        }));
        Self { samples, winding: winding_add(self.winding, other.winding), closed: false }
    }

    /// `∫ f(point, velocity) dt` along the samples.
    pub fn integrate(&self, f: impl Fn(&Point, &Vector) -> f64) -> f64 {
        *self.cumulative(f).last().unwrap_or(&0.0)
    }

    /// Running integral at every sample: Simpson weights on uniform
    /// parameter grids, trapezoid otherwise.
    pub fn cumulative(&self, f: impl Fn(&Point, &Vector) -> f64) -> Vec<f64> {
        let vals: Vec<f64> = self.samples.iter().map(|s| f(&s.point, &s.velocity)).collect();
        let ts: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        cumulative_quadrature(&ts, &vals)
    }

    /// Reparametrizes by `F`-length. Fails where `F(velocity)` is not positive.
    pub fn f_affine(&self, f: impl Fn(&Point, &Vector) -> f64) -> Result<Self, CurveError> {
        for (index, s) in self.samples.iter().enumerate() {
            let value = f(&s.point, &s.velocity);
            if !(value > 0.0) {
                return Err(CurveError::DegenerateSpeed { index, value });
            }
        }
        let tau = self.cumulative(&f);
        let samples = self
            .samples
            .iter()
            .zip(&tau)
            .map(|(s, &t)| {
                let speed = f(&s.point, &s.velocity);
                CurveSample { t, point: s.point, velocity: s.velocity / speed }
            })
            .collect();
        Self::new(samples, self.winding, self.closed)
    }

    /// Samples mapped into the fundamental domain.
    pub fn wrapped_points(&self, chart: &ChartManifold) -> Vec<Point> {
        self.samples.iter().map(|s| chart.wrap(&s.point)).collect()
    }
}

/// Periods crossed going from lifted point `a` to lifted point `b`.
pub fn lifted_winding(chart: &ChartManifold, a: &Point, b: &Point) -> Winding {
    let (_, wa) = chart.wrap_with_winding(a);
    let (_, wb) = chart.wrap_with_winding(b);
    [wb[0] - wa[0], wb[1] - wa[1]]
}

fn is_uniform(ts: &[f64]) -> bool {
    if ts.len() < 3 {
        return false;
    }
    let h = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    ts.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

pub(crate) fn cumulative_quadrature(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if !is_uniform(ts) {
        for k in 1..n {
            out[k] = out[k - 1] + 0.5 * (ts[k] - ts[k - 1]) * (vals[k] + vals[k - 1]);
        }
        return out;
    }
    let h = (ts[n - 1] - ts[0]) / (n - 1) as f64;
    let mut k = 2;
    while k < n {
        out[k] = out[k - 2] + h / 3.0 * (vals[k - 2] + 4.0 * vals[k - 1] + vals[k]);
        k += 2;
    }
    // odd samples: third-order single-interval rules on a three-point stencil
    let mut k = 1;
    while k < n {
        out[k] = if k + 1 < n {
            out[k - 1] + h / 12.0 * (5.0 * vals[k - 1] + 8.0 * vals[k] - vals[k + 1])
        } else {
            out[k - 1] + h / 12.0 * (-vals[k - 2] + 8.0 * vals[k - 1] + 5.0 * vals[k])
        };
        k += 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(n: usize) -> Curve {
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                CurveSample {
                    t,
                    point: Point::new(t.cos(), t.sin()),
                    velocity: Vector::new(-t.sin(), t.cos()),
                }
            })
            .collect();
        Curve::new(samples, [0, 0], false).unwrap()
    }

    #[test]
    fn reversal_negates_winding_and_reverses_order() {
        let mut c = arc(10);
        c.winding = [1, -2];
        let r = c.reversed();
        assert_eq!(r.winding, [-1, 2]);
        assert_eq!(r.start().point, c.end().point);
        assert_eq!(r.end().point, c.start().point);
        assert_eq!(r.start().velocity, -c.end().velocity);
        let back = r.reversed();
        assert_eq!(back.winding, c.winding);
        for (a, b) in back.samples().iter().zip(c.samples()) {
            assert_eq!(a.point, b.point);
            assert_eq!(a.velocity, b.velocity);
            assert!((a.t - b.t).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_increasing_parameters() {
        let s = CurveSample { t: 0.0, point: Point::zeros(), velocity: Vector::zeros() };
        assert_eq!(Curve::new(vec![s, s], [0, 0], false), Err(CurveError::NonIncreasing { index: 1 }));
    }

    #[test]
    fn velocity_matches_point_differences() {
        let c = arc(200);
        let s = c.samples();
        for k in 1..s.len() - 1 {
            let fd = (s[k + 1].point - s[k - 1].point) / (s[k + 1].t - s[k - 1].t);
            assert!((fd - s[k].velocity).norm() < 1e-5);
        }
    }

    #[test]
    fn quadrature_integrates_cubics_and_arcs() {
        let c = arc(64);
        let len = c.integrate(|_, v| v.norm());
        assert!((len - 1.0).abs() < 1e-12);
        let cum = c.cumulative(|p, _| p[0]);
        for (k, s) in c.samples().iter().enumerate() {
            assert!((cum[k] - s.t.sin()).abs() < 1e-8, "k={k}");
        }
    }

    #[test]
    fn concatenation_adds_integrals_and_windings() {
        let mut a = Curve::segment(Point::new(0.0, 0.0), Vector::new(0.6, 0.0), 8);
        let mut b = Curve::segment(Point::new(0.0, 0.0), Vector::new(0.0, 0.6), 8);
        a.winding = [1, 0];
        b.winding = [0, 1];
        let c = a.concat(&b);
        assert_eq!(c.winding, [1, 1]);
        assert_eq!(c.end().point, Point::new(0.6, 0.6));
        let len = |c: &Curve| c.integrate(|_, v| v.norm());
        assert!((len(&c) - len(&a) - len(&b)).abs() < 1e-14);
    }

    #[test]
    fn f_affine_rejects_zero_speed() {
        let c = Curve::segment(Point::zeros(), Vector::new(-1.0, 0.0), 4);
        let err = c.f_affine(|_, v| 0.5 * v[0] + 0.5 * v.norm()).unwrap_err();
        assert!(matches!(err, CurveError::DegenerateSpeed { index: 0, .. }));
        let ok = c.f_affine(|_, v| 2.0 * v.norm()).unwrap();
        assert!((ok.span() - 2.0).abs() < 1e-14);
    }
}
