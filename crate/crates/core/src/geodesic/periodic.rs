use crate::fields::{winding_is_zero, ChartManifold, Curve, CurveSample, Point, Vector, Winding, DIM};
use crate::metrics::PreRandersMetric;

use super::integrate::{h_unit, integrate_pregeodesic, GeodesicProblem, DEFAULT_STEPS};
use super::shooting::{refine, ShootingOptions};
use super::GeodesicError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicOptions {
    pub vertices: usize,
    pub max_iterations: usize,
    /// Relative change in length regarded as converged.
    pub tol: f64,
    /// Attempt a shooting polish of the descended polygon.
    pub polish: bool,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        Self { vertices: 64, max_iterations: 4000, tol: 1e-13, polish: true }
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicLoop {
    pub curve: Curve,
    pub length_f: f64,
    pub winding: Winding,
    /// Best straight loop in the class, the starting point of the descent.
    pub straight_length: f64,
    /// Whether `curve` is an integrated pre-geodesic rather than the polygon.
    pub polished: bool,
    /// Angle between the final and initial velocity of a polished loop.
    pub corner_angle: f64,
    pub iterations: usize,
    /// Negative length: iterating the loop drives `ℓ_F` to `−∞`.
    pub vicious: bool,
}

struct Polygon<'a> {
    m: &'a PreRandersMetric,
    shift: Vector,
    n: usize,
}

impl Polygon<'_> {
    fn vertex(&self, x: &[Point], k: usize) -> Point {
        if k < self.n {
            x[k]
        } else {
            x[k - self.n] + self.shift
        }
    }

    fn segment(&self, a: &Point, b: &Point) -> f64 {
        self.m.f(&((a + b) * 0.5), &(b - a))
    }

    fn length(&self, x: &[Point]) -> f64 {
        (0..self.n).map(|k| self.segment(&x[k], &self.vertex(x, k + 1))).sum()
    }

    fn gradient(&self, x: &[Point], delta: f64) -> Vec<Vector> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let prev = if k == 0 { x[n - 1] - self.shift } else { x[k - 1] };
                let next = self.vertex(x, k + 1);
                let mut g = Vector::zeros();
                for c in 0..DIM {
                    let mut e = Vector::zeros();
                    e[c] = delta;
                    let (p, q) = (x[k] + e, x[k] - e);
                    let fp = self.segment(&prev, &p) + self.segment(&p, &next);
                    let fq = self.segment(&prev, &q) + self.segment(&q, &next);
                    g[c] = (fp - fq) / (2.0 * delta);
                }
                g
            })
            .collect()
    }

    /// Moves vertices to equal `h`-arclength spacing along the polygon.
    fn redistribute(&self, x: &[Point]) -> Vec<Point> {
        let n = self.n;
        let mut cum = vec![0.0; n + 1];
        for k in 0..n {
            let (a, b) = (x[k], self.vertex(x, k + 1));
            cum[k + 1] = cum[k] + self.m.h_norm(&((a + b) * 0.5), &(b - a));
        }
        let total = cum[n];
        if !(total > 0.0) {
            return x.to_vec();
        }
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while seg + 1 < n && cum[seg + 1] < target {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let t = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
            out.push(x[seg] + (self.vertex(x, seg + 1) - x[seg]) * t);
        }
        out
    }
}

fn clamp(chart: &ChartManifold, x: &mut [Point]) {
    for p in x.iter_mut() {
        for axis in 0..DIM {
            if !chart.is_periodic(axis) {
                let b = chart.bounds()[axis];
                p[axis] = p[axis].clamp(b.lo, b.hi);
            }
        }
    }
}

fn dot(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u.dot(v)).sum()
}

fn polygon_curve(poly: &Polygon, x: &[Point], winding: Winding) -> Curve {
    let samples = (0..=poly.n)
        .map(|k| {
            let a = poly.vertex(x, k);
            let b = poly.vertex(x, (k + 1).min(poly.n));
            let v = if k < poly.n { b - a } else { poly.vertex(x, 1) - x[0] };
            CurveSample { t: k as f64, point: a, velocity: v }
        })
        .collect();
    Curve::new(samples, winding, true).expect("polygon has vertices")
}

/// Minimizes `ℓ_F` over closed polygons in the class `winding`, starting
/// from the best straight loop, then polishes the result by shooting from a
/// vertex to its translate. Winding must vanish on bounded axes.
pub fn periodic_search(m: &PreRandersMetric, winding: Winding, opts: &PeriodicOptions) -> Result<PeriodicLoop, GeodesicError> {
    let chart = m.chart();
    if winding_is_zero(winding) {
        return Err(GeodesicError::ZeroWinding);
    }
    if (0..DIM).any(|a| winding[a] != 0 && !chart.is_periodic(a)) {
        return Err(GeodesicError::NotPeriodic { winding });
    }
    let shift = chart.period_vector(winding);
    let n = opts.vertices.max(8);
    let poly = Polygon { m, shift, n };

    let lo = chart.lo();
    let mut best: Option<(f64, Vec<Point>)> = None;
    for i in 0..16 {
        for j in 0..16 {
            let base = lo + Vector::new(chart.extent(0) * i as f64 / 16.0, chart.extent(1) * j as f64 / 16.0);
            let x: Vec<Point> = (0..n).map(|k| base + shift * (k as f64 / n as f64)).collect();
            let l = poly.length(&x);
            if best.as_ref().map_or(true, |b| l < b.0) {
                best = Some((l, x));
            }
        }
    }
    let (straight_length, mut x) = best.expect("candidates");
    let scale = shift.norm();
    let delta = 1e-7 * scale;
    let blowup = -1e3 * (1.0 + straight_length.abs());

    let mut len = straight_length;
    let mut g = poly.gradient(&x, delta);
    let mut d: Vec<Vector> = g.iter().map(|v| -v).collect();
    let mut alpha = 1e-3 * scale;
    let mut quiet = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        if slope == 0.0 {
            break;
        }
        alpha *= 2.0;
        let mut trial;
        let mut trial_len;
        let mut tries = 0;
        loop {
            trial = x.iter().zip(&d).map(|(p, v)| p + v * alpha).collect::<Vec<_>>();
            clamp(chart, &mut trial);
            trial_len = poly.length(&trial);
            if trial_len <= len + 1e-4 * alpha * slope || tries > 60 {
                break;
            }
            alpha *= 0.5;
            tries += 1;
        }
        if !(trial_len < len) {
            break;
        }
        let change = len - trial_len;
        x = trial;
        len = trial_len;
        if len < blowup {
            return Err(GeodesicError::UnboundedBelow { length: len });
        }
        let g_new = poly.gradient(&x, delta);
        let denom = dot(&g, &g);
        let beta = if denom > 0.0 && iterations % (2 * n) != 0 {
            (dot(&g_new, &g_new) - dot(&g_new, &g)) / denom
        } else {
            0.0
        };
        d = g_new.iter().zip(&d).map(|(gn, dv)| -gn + dv * beta.max(0.0)).collect();
        g = g_new;
        if iterations % 100 == 0 {
            let y = poly.redistribute(&x);
            let ly = poly.length(&y);
            if ly <= len + opts.tol * (1.0 + len.abs()) * 1e3 {
                x = y;
                len = ly;
                g = poly.gradient(&x, delta);
                d = g.iter().map(|v| -v).collect();
            }
        }
        quiet = if change <= opts.tol * (1.0 + len.abs()) { quiet + 1 } else { 0 };
        if quiet >= 5 {
            break;
        }
    }

    let polygon = PeriodicLoop {
        curve: polygon_curve(&poly, &x, winding),
        length_f: len,
        winding,
        straight_length,
        polished: false,
        corner_angle: f64::NAN,
        iterations,
        vicious: len < 0.0,
    };
    if !opts.polish {
        return Ok(polygon);
    }
    Ok(polish(m, &poly, &x, polygon).unwrap_or_else(|p| p))
}

fn polish(m: &PreRandersMetric, poly: &Polygon, x: &[Point], fallback: PeriodicLoop) -> Result<PeriodicLoop, PeriodicLoop> {
    let x0 = x[0];
    let target = x0 + poly.shift;
    let tangent = x[1] - (x[poly.n - 1] - poly.shift);
    let heading = tangent[1].atan2(tangent[0]);
    let span: f64 = (0..poly.n)
        .map(|k| {
            let (a, b) = (poly.vertex(x, k), poly.vertex(x, k + 1));
            m.h_norm(&((a + b) * 0.5), &(b - a))
        })
        .sum();
    let opts = ShootingOptions::default();
    let tol = opts.eps_shoot_rel * m.chart().diameter();
    let Some((heading, span, _)) = refine(m, &x0, &target, heading, span, &opts, 0.01 * tol) else {
        return Err(fallback);
    };
    let v = h_unit(m, &x0, heading);
    let Ok(tr) = integrate_pregeodesic(m, &GeodesicProblem::new(x0, v, span).with_steps(DEFAULT_STEPS)) else {
        return Err(fallback);
    };
    if tr.left_chart {
        return Err(fallback);
    }
    let mut curve = tr.curve;
    curve.winding = fallback.winding;
    curve.closed = true;
    let length_f = m.length(&curve);
    if length_f > fallback.length_f + 1e-3 * (1.0 + fallback.length_f.abs()) {
        return Err(fallback);
    }
    let (a, b) = (curve.start().velocity, curve.end().velocity);
    let corner_angle = (a[0] * b[1] - a[1] * b[0]).atan2(a.dot(&b)).abs();
    Ok(PeriodicLoop { curve, length_f, polished: true, corner_angle, vicious: length_f < 0.0, ..fallback })
}
