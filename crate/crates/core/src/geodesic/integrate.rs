use crate::fields::{ChartManifold, Curve, CurveSample, Point, Vector};
use crate::metrics::PreRandersMetric;

use super::GeodesicError;

/// Initial data for the pre-geodesic flow in `h`-arclength parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicProblem {
    pub x0: Point,
    pub v0: Vector,
    pub span: f64,
    /// Fixed steps over the span.
    pub steps: usize,
}

pub const DEFAULT_STEPS: usize = 4096;

/// Halvings allowed before a step is declared failed.
const MAX_HALVINGS: u32 = 10;

impl GeodesicProblem {
    pub fn new(x0: Point, v0: Vector, span: f64) -> Self {
        Self { x0, v0, span, steps: DEFAULT_STEPS }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }
}

/// An integrated path. Integration stops early when a bounded chart is left.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub curve: Curve,
    pub left_chart: bool,
    /// Largest relative deviation of the conserved speed from its start value.
    pub speed_drift: f64,
}

/// Acceleration of the pre-geodesic flow: `−Γ(u,u) + |u|_h·Y(u)`.
pub fn pregeodesic_acceleration(m: &PreRandersMetric, x: &Point, u: &Vector) -> Vector {
    let g = m.geometry(x);
    let gamma = g.christoffel();
    let mut a = Vector::zeros();
    for (k, gk) in gamma.iter().enumerate() {
        let mut s = 0.0;
        for (i, gi) in gk.iter().enumerate() {
            for (j, gij) in gi.iter().enumerate() {
                s += gij * u[i] * u[j];
            }
        }
        a[k] = -s;
    }
    let speed = u.dot(&(g.h * u)).max(0.0).sqrt();
    a + g.lorentz_y(u) * speed
}

fn rk4<A: Fn(&Point, &Vector) -> Vector>(acc: &A, x: &Point, v: &Vector, dt: f64) -> (Point, Vector) {
    let k1x = *v;
    let k1v = acc(x, v);
    let x2 = x + k1x * (0.5 * dt);
    let v2 = v + k1v * (0.5 * dt);
    let k2v = acc(&x2, &v2);
    let x3 = x + v2 * (0.5 * dt);
    let v3 = v + k2v * (0.5 * dt);
    let k3v = acc(&x3, &v3);
    let x4 = x + v3 * dt;
    let v4 = v + k3v * dt;
    let k4v = acc(&x4, &v4);
    let xn = x + (k1x + v2 * 2.0 + v3 * 2.0 + v4) * (dt / 6.0);
    let vn = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
    (xn, vn)
}

/// One output step of length `dt`, split in halves while the step produces
/// non-finite values or changes the conserved speed by more than `1e-9`.
fn step<A, S>(acc: &A, speed: &S, x: &Point, v: &Vector, dt: f64, depth: u32) -> Option<(Point, Vector)>
where
    A: Fn(&Point, &Vector) -> Vector,
    S: Fn(&Point, &Vector) -> f64,
{
    let (xn, vn) = rk4(acc, x, v, dt);
    let s0 = speed(x, v);
    let ok = xn.iter().chain(vn.iter()).all(|c| c.is_finite()) && (speed(&xn, &vn) - s0).abs() <= 1e-9 * s0.max(1e-300);
    if ok {
        return Some((xn, vn));
    }
    if depth >= MAX_HALVINGS {
        return None;
    }
    let (xm, vm) = step(acc, speed, x, v, 0.5 * dt, depth + 1)?;
    step(acc, speed, &xm, &vm, 0.5 * dt, depth + 1)
}

/// Fixed-step RK4 for `ẍ = acc(x, ẋ)` with a conserved `speed(x, ẋ)`.
pub(crate) fn integrate_flow<A, S>(
    chart: &ChartManifold,
    x0: Point,
    v0: Vector,
    span: f64,
    steps: usize,
    acc: A,
    speed: S,
) -> Result<Trajectory, GeodesicError>
where
    A: Fn(&Point, &Vector) -> Vector,
    S: Fn(&Point, &Vector) -> f64,
{
    if !(span > 0.0) || !span.is_finite() || steps == 0 {
        return Err(GeodesicError::InvalidProblem(format!("span {span} with {steps} steps")));
    }
    let s0 = speed(&x0, &v0);
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(GeodesicError::InvalidProblem(format!("initial speed {s0}")));
    }
    let dt = span / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(CurveSample { t: 0.0, point: x0, velocity: v0 });
    let (mut x, mut v) = (x0, v0);
    let mut drift: f64 = 0.0;
    let mut left_chart = false;
    for k in 1..=steps {
        let (xn, vn) = step(&acc, &speed, &x, &v, dt, 0).ok_or(GeodesicError::StepRejected { t: (k - 1) as f64 * dt })?;
        if !chart.contains(&xn) {
            left_chart = true;
            break;
        }
        x = xn;
        v = vn;
        drift = drift.max((speed(&x, &v) - s0).abs() / s0);
        samples.push(CurveSample { t: k as f64 * dt, point: x, velocity: v });
    }
    if samples.len() < 2 {
        return Err(GeodesicError::LeftChart);
    }
    let curve = Curve::open_in(chart, samples).expect("strictly increasing parameters");
    Ok(Trajectory { curve, left_chart, speed_drift: drift })
}

/// Integrates `D_h γ̇ = |γ̇|_h·Y(γ̇)`, the Euler–Lagrange equation of `∫F`
/// with the `h`-speed held constant.
pub fn integrate_pregeodesic(m: &PreRandersMetric, p: &GeodesicProblem) -> Result<Trajectory, GeodesicError> {
    if !(p.steps > 0) {
        return Err(GeodesicError::InvalidProblem("step must be positive".into()));
    }
    integrate_flow(
        m.chart(),
        p.x0,
        p.v0,
        p.span,
        p.steps,
        |x, u| pregeodesic_acceleration(m, x, u),
        |x, u| m.h_norm(x, u),
    )
}

/// `h`-unit vector in coordinate direction `angle` at `x`.
pub fn h_unit(m: &PreRandersMetric, x: &Point, angle: f64) -> Vector {
    let e = Vector::new(angle.cos(), angle.sin());
    e / m.h_norm(x, &e)
}
