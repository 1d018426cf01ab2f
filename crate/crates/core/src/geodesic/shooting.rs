use crate::exec::map_indexed;
use crate::fields::{Curve, Point, Vector, Winding, DIM};
use crate::metrics::{audit_points, PreRandersMetric};
use crate::numerics::{min_eig_sym2, GAUSS4};

use super::integrate::{h_unit, integrate_pregeodesic, GeodesicProblem, DEFAULT_STEPS};
use super::GeodesicError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Initial headings of the scan.
    pub directions: usize,
    /// Success threshold relative to the chart diameter.
    pub eps_shoot_rel: f64,
    /// Largest winding tried on each periodic axis.
    pub w_max: i64,
    pub max_newton: usize,
    /// Steps per scan trajectory.
    pub scan_steps: usize,
    /// Steps per Newton trajectory.
    pub newton_steps: usize,
    /// Scan span as a multiple of the chord's `h`-length.
    pub span_factor: f64,
    /// Seeds refined per winding class.
    pub seeds: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            directions: 64,
            eps_shoot_rel: 1e-6,
            w_max: 2,
            max_newton: 40,
            scan_steps: 256,
            newton_steps: 1024,
            span_factor: 3.0,
            seeds: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub curve: Curve,
    /// `h`-distance of the endpoint from the target.
    pub residual: f64,
    pub iterations: usize,
    pub length_f: f64,
    pub winding: Winding,
    /// Coordinate angle of the initial velocity.
    pub heading: f64,
    /// `h`-arclength of the connector.
    pub span: f64,
}

fn chord_h_length(m: &PreRandersMetric, a: &Point, b: &Point) -> f64 {
    let d = b - a;
    GAUSS4.unit(|s| m.h_norm(&(a + d * s), &d))
}

fn endpoint(m: &PreRandersMetric, x0: &Point, heading: f64, span: f64, steps: usize) -> Option<(Point, Vector)> {
    let v = h_unit(m, x0, heading);
    let tr = integrate_pregeodesic(m, &GeodesicProblem::new(*x0, v, span).with_steps(steps)).ok()?;
    if tr.left_chart {
        return None;
    }
    let e = tr.curve.end();
    Some((e.point, e.velocity))
}

/// Newton iteration on `(heading, span)` for `x(heading, span) = target`.
pub(crate) fn refine(
    m: &PreRandersMetric,
    x0: &Point,
    target: &Point,
    mut heading: f64,
    mut span: f64,
    opts: &ShootingOptions,
    tol: f64,
) -> Option<(f64, f64, usize)> {
    let (end, mut vel) = endpoint(m, x0, heading, span, opts.newton_steps)?;
    let mut r = end - target;
    let delta = 1e-6;
    for it in 0..opts.max_newton {
        if r.norm() <= tol {
            return Some((heading, span, it));
        }
        let (p, _) = endpoint(m, x0, heading + delta, span, opts.newton_steps)?;
        let (q, _) = endpoint(m, x0, heading - delta, span, opts.newton_steps)?;
        let d_heading = (p - q) / (2.0 * delta);
        let det = d_heading[0] * vel[1] - d_heading[1] * vel[0];
        if det.abs() < 1e-14 {
            return None;
        }
        // solve [d_heading vel] (dh, ds)ᵀ = −r
        let dh = -(r[0] * vel[1] - r[1] * vel[0]) / det;
        let ds = -(d_heading[0] * r[1] - d_heading[1] * r[0]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let (h2, s2) = (heading + lambda * dh, span + lambda * ds);
            if s2 > 0.0 {
                if let Some((e2, v2)) = endpoint(m, x0, h2, s2, opts.newton_steps) {
                    let r2 = e2 - target;
                    if r2.norm() < r.norm() {
                        heading = h2;
                        span = s2;
                        vel = v2;
                        r = r2;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (r.norm() <= tol).then_some((heading, span, opts.max_newton))
}

fn finish(
    m: &PreRandersMetric,
    x0: &Point,
    target: &Point,
    winding: Winding,
    (heading, span, iterations): (f64, f64, usize),
    tol: f64,
) -> Option<ShootingResult> {
    let v = h_unit(m, x0, heading);
    let tr = integrate_pregeodesic(m, &GeodesicProblem::new(*x0, v, span).with_steps(DEFAULT_STEPS)).ok()?;
    if tr.left_chart {
        return None;
    }
    let mut curve = tr.curve;
    let r = curve.end().point - target;
    let residual = m.h_norm(target, &r);
    if residual > tol {
        return None;
    }
    curve.winding = winding;
    let length_f = m.length(&curve);
    Some(ShootingResult { curve, residual, iterations, length_f, winding, heading, span })
}

/// Connects `x0` to the lifted point `target`; `winding` labels the class.
pub fn shoot_connect_class(
    m: &PreRandersMetric,
    x0: &Point,
    target: &Point,
    winding: Winding,
    opts: &ShootingOptions,
) -> Result<ShootingResult, GeodesicError> {
    let tol = opts.eps_shoot_rel * m.chart().diameter();
    let chord = chord_h_length(m, x0, target);
    if chord == 0.0 {
        let curve = Curve::segment(*x0, Vector::zeros(), 1);
        return Ok(ShootingResult { curve, residual: 0.0, iterations: 0, length_f: 0.0, winding, heading: 0.0, span: 0.0 });
    }
    let scan_span = opts.span_factor * chord;
    let scans = map_indexed(opts.directions, |k| {
        let heading = std::f64::consts::TAU * k as f64 / opts.directions as f64;
        let v = h_unit(m, x0, heading);
        let p = GeodesicProblem::new(*x0, v, scan_span).with_steps(opts.scan_steps);
        let tr = integrate_pregeodesic(m, &p).ok()?;
        tr.curve
            .samples()
            .iter()
            .skip(1)
            .map(|s| ((s.point - target).norm(), s.t))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(d, t)| (d, heading, t))
    });
    let mut seeds: Vec<(f64, f64, f64)> = scans.into_iter().flatten().collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(opts.seeds);
    let found: Vec<Option<ShootingResult>> = map_indexed(seeds.len(), |k| {
        let (_, heading, span) = seeds[k];
        let sol = refine(m, x0, target, heading, span, opts, 0.01 * tol)?;
        finish(m, x0, target, winding, sol, tol)
    });
    found
        .into_iter()
        .flatten()
        .min_by(|a, b| a.length_f.total_cmp(&b.length_f))
        .ok_or(GeodesicError::NotFound { winding })
}

fn winding_classes(m: &PreRandersMetric, w_max: i64) -> Vec<Winding> {
    let range = |axis: usize| if m.chart().is_periodic(axis) { -w_max..=w_max } else { 0..=0 };
    let mut out = Vec::new();
    for a in range(0) {
        for b in range(1) {
            out.push([a, b]);
        }
    }
    out
}

/// Sup of `|ω|_h` and the smallest eigenvalue of `h` over the audit lattice.
fn drift_bounds(m: &PreRandersMetric) -> (f64, f64) {
    let mut kappa: f64 = 0.0;
    let mut lam = f64::INFINITY;
    for p in audit_points(m.chart(), 17) {
        let (h, w) = m.local(&p);
        if let Some(inv) = h.try_inverse() {
            kappa = kappa.max(w.dot(&(inv * w)).sqrt());
        }
        lam = lam.min(min_eig_sym2(h[(0, 0)], h[(0, 1)], h[(1, 1)]));
    }
    (kappa, lam)
}

/// Every winding class with `|w_i| ≤ w_max` on periodic axes in which a
/// connector was found.
pub fn shoot_connect_all(m: &PreRandersMetric, x0: &Point, x1: &Point, opts: &ShootingOptions) -> Vec<ShootingResult> {
    winding_classes(m, opts.w_max)
        .into_iter()
        .filter_map(|w| {
            let target = x1 + m.chart().period_vector(w);
            shoot_connect_class(m, x0, &target, w, opts).ok()
        })
        .collect()
}

/// Best connector over winding classes. Classes whose `F`-length lower bound
/// `(1 − sup|ω|_h)·√λ_min·|Δx|` exceeds the best length so far are skipped.
pub fn shoot_connect(m: &PreRandersMetric, x0: &Point, x1: &Point, opts: &ShootingOptions) -> Result<ShootingResult, GeodesicError> {
    if x0 == x1 {
        return shoot_connect_class(m, x0, x1, [0; DIM], opts);
    }
    let (kappa, lam) = drift_bounds(m);
    let mut classes: Vec<(f64, Winding)> = winding_classes(m, opts.w_max)
        .into_iter()
        .map(|w| ((x1 + m.chart().period_vector(w) - x0).norm(), w))
        .collect();
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<ShootingResult> = None;
    for (dist, w) in classes {
        if kappa < 1.0 {
            if let Some(b) = &best {
                if (1.0 - kappa) * lam.sqrt() * dist > b.length_f {
                    continue;
                }
            }
        }
        let target = x1 + m.chart().period_vector(w);
        if let Ok(r) = shoot_connect_class(m, x0, &target, w, opts) {
            if best.as_ref().map_or(true, |b| r.length_f < b.length_f) {
                best = Some(r);
            }
        }
    }
    best.ok_or(GeodesicError::NotFound { winding: [0; DIM] })
}
