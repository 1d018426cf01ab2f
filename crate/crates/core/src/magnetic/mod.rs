//! Magnetic structures `(g, Ω)` with `Ω = B dx∧dy`.
//!
//! The Lorentz force `Y` is defined by `Ω(u, v) = g(Y(u), v)`, which makes
//! orbits with `B > 0` turn counterclockwise. Magnetic geodesics of energy
//! `c` are the pre-geodesics of `F_c = √g + ω/√(2c)` for any potential with
//! `dω = −Ω`, parametrized so that `g(γ̇, γ̇) = 2c`. Trajectories come from
//! the Lagrangian `½g(v, v) + ω(v)`; only its Euler–Lagrange equation is used
//! here.

use thiserror::Error;

use crate::distance::{build_graph, has_cycle_below, node_potential, symmetrized_row, DistanceError, Stencil};
use crate::fields::{ChartManifold, Curve, CurveSample, OneFormField, Point, ScalarField, SymTensorField, Vector, Winding};
use crate::geodesic::{
    integrate_flow, pregeodesic_acceleration, shoot_connect, GeodesicError, GeodesicProblem, PeriodicOptions,
    ShootingOptions, Trajectory,
};
use crate::metrics::{audit_points, MetricError, PreRandersMetric};
use crate::numerics::GAUSS8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagneticError {
    #[error("energy must be positive, got {0}")]
    Energy(f64),
    #[error("magnetic flux {flux:.6e} through the torus is nonzero: no global potential on the chart (one exists only on the universal cover)")]
    NonzeroFlux { flux: f64 },
    #[error("supplied potential does not satisfy d(omega) = -B dx^dy at ({x}, {y}): residual {residual:.3e}")]
    PotentialMismatch { x: f64, y: f64, residual: f64 },
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel(f64);

impl EnergyLevel {
    pub fn new(c: f64) -> Result<Self, MagneticError> {
        if c > 0.0 && c.is_finite() {
            Ok(Self(c))
        } else {
            Err(MagneticError::Energy(c))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `√(2c)`, the `g`-speed of orbits of this energy.
    pub fn speed(self) -> f64 {
        (2.0 * self.0).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct MagneticStructure {
    b: ScalarField,
    potential: OneFormField,
    /// `g` with zero one-form, for Christoffel symbols and norms.
    riemann: PreRandersMetric,
}

/// Panels per unit length in potential quadratures.
const PANELS_PER_UNIT: f64 = 4.0;
/// Intervals of the tabulated line mean of `B`.
const MEAN_TABLE: usize = 512;

fn integrate_1d(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = ((b - a).abs() * PANELS_PER_UNIT).ceil().max(1.0) as usize;
    GAUSS8.composite(a, b, panels, f)
}

/// Cubic Hermite interpolant of `m(y)` from values and slopes on a uniform
/// table, with exact prefix integrals.
#[derive(Debug)]
struct HermiteTable {
    lo: f64,
    h: f64,
    value: Vec<f64>,
    slope: Vec<f64>,
    prefix: Vec<f64>,
}

impl HermiteTable {
    fn new(lo: f64, hi: f64, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let h = (hi - lo) / MEAN_TABLE as f64;
        let (value, slope): (Vec<f64>, Vec<f64>) = (0..=MEAN_TABLE).map(|k| f(lo + k as f64 * h)).unzip();
        let mut prefix = vec![0.0];
        for k in 0..MEAN_TABLE {
            let full = h * (0.5 * (value[k] + value[k + 1]) + h * (slope[k] - slope[k + 1]) / 12.0);
            prefix.push(prefix[k] + full);
        }
        Self { lo, h, value, slope, prefix }
    }

    fn locate(&self, y: f64) -> (usize, f64) {
        let u = ((y - self.lo) / self.h).max(0.0);
        let k = (u.floor() as usize).min(MEAN_TABLE - 1);
        (k, u - k as f64)
    }

    /// Value and derivative.
    fn eval(&self, y: f64) -> (f64, f64) {
        let (k, t) = self.locate(y);
        let (p0, p1, m0, m1) = (self.value[k], self.value[k + 1], self.slope[k] * self.h, self.slope[k + 1] * self.h);
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * m1;
        (v, d / self.h)
    }

    /// `∫_lo^y` of the interpolant.
    fn integral(&self, y: f64) -> f64 {
        let (k, t) = self.locate(y);
        let (p0, p1, m0, m1) = (self.value[k], self.value[k + 1], self.slope[k] * self.h, self.slope[k + 1] * self.h);
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        let part = (0.5 * t4 - t3 + t) * p0 + (0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2) * m0 + (-0.5 * t4 + t3) * p1 + (0.25 * t4 - t3 / 3.0) * m1;
        self.prefix[k] + self.h * part
    }
}

/// A potential with `dω = −B dx∧dy`:
/// `ω = −(∫₀ˣ B ds − x·b̄(y)) dy + (∫₀ʸ b̄ dt) dx`, where `b̄` interpolates
/// the mean of `B` over a period in `x` when `x` is periodic and is zero
/// otherwise. Any `b̄` gives `dω = −B dx∧dy`; the mean keeps `ω` periodic
/// whenever the total flux vanishes. The base point `0` is clamped into
/// bounded charts.
pub fn construct_potential(chart: &ChartManifold, b: &ScalarField) -> Result<OneFormField, MagneticError> {
    let [ix, iy] = *chart.bounds();
    let base = |i: crate::fields::Interval, periodic: bool| if periodic { 0.0 } else { 0.0f64.clamp(i.lo, i.hi) };
    let x_periodic = chart.is_periodic(0);
    let (x0, y0) = (base(ix, x_periodic), base(iy, chart.is_periodic(1)));
    let lx = ix.extent();

    let mean = if x_periodic {
        let table = HermiteTable::new(iy.lo, iy.hi, |y| {
            let v = integrate_1d(ix.lo, ix.hi, |s| b.value(&Point::new(s, y))) / lx;
            let d = integrate_1d(ix.lo, ix.hi, |s| b.gradient(chart, &Point::new(s, y)).0[1]) / lx;
            (v, d)
        });
        if chart.is_periodic(1) {
            let flux = table.integral(iy.hi) * lx;
            let scale = integrate_1d(iy.lo, iy.hi, |y| integrate_1d(ix.lo, ix.hi, |s| b.value(&Point::new(s, y)).abs()));
            if flux.abs() > 1e-9 * (1.0 + scale) {
                return Err(MagneticError::NonzeroFlux { flux });
            }
        }
        Some(std::sync::Arc::new(table))
    } else {
        None
    };
    let mean_at = {
        let mean = mean.clone();
        move |y: f64| mean.as_ref().map_or((0.0, 0.0), |t| t.eval(y))
    };

    let wy = {
        let (b, chart, mean_at) = (b.clone(), chart.clone(), mean_at.clone());
        move |p: &Point| {
            let q = chart.wrap(p);
            -(integrate_1d(x0, q[0], |s| b.value(&Point::new(s, q[1]))) - (q[0] - x0) * mean_at(q[1]).0)
        }
    };
    let wy_grad = {
        let (b, chart, mean_at) = (b.clone(), chart.clone(), mean_at.clone());
        move |p: &Point| {
            let q = chart.wrap(p);
            let (m, dm) = mean_at(q[1]);
            let dx = -(b.value(&q) - m);
            let dy = -(integrate_1d(x0, q[0], |s| b.gradient(&chart, &Point::new(s, q[1])).0[1]) - (q[0] - x0) * dm);
            Vector::new(dx, dy)
        }
    };
    let wy = ScalarField::from_fn(format!("potential_y[{}]", b.label()), wy).with_gradient(wy_grad);
    let Some(table) = mean else {
        return Ok(OneFormField::new(ScalarField::zero(), wy));
    };
    let at_base = table.integral(y0);
    let wx = {
        let (chart, table) = (chart.clone(), table.clone());
        move |p: &Point| table.integral(chart.wrap(p)[1]) - at_base
    };
    let wx_grad = {
        let chart = chart.clone();
        move |p: &Point| Vector::new(0.0, mean_at(chart.wrap(p)[1]).0)
    };
    let wx = ScalarField::from_fn(format!("potential_x[{}]", b.label()), wx).with_gradient(wx_grad);
    Ok(OneFormField::new(wx, wy))
}

impl MagneticStructure {
    /// Builds the structure, constructing a potential when none is given and
    /// checking a supplied one against `B` on the audit lattice.
    pub fn new(chart: ChartManifold, g: SymTensorField, b: ScalarField, potential: Option<OneFormField>) -> Result<Self, MagneticError> {
        let riemann = PreRandersMetric::new(chart.clone(), g, OneFormField::zero())?;
        let potential = match potential {
            Some(w) => {
                for p in audit_points(&chart, 9) {
                    let (curl, _) = w.curl(&chart, &p);
                    let bv = b.value(&p);
                    let residual = (curl + bv).abs();
                    if residual > 1e-6 * (1.0 + bv.abs()) {
                        return Err(MagneticError::PotentialMismatch { x: p[0], y: p[1], residual });
                    }
                }
                w
            }
            None => construct_potential(&chart, &b)?,
        };
        Ok(Self { b, potential, riemann })
    }

    pub fn chart(&self) -> &ChartManifold {
        self.riemann.chart()
    }

    pub fn g(&self) -> &SymTensorField {
        self.riemann.h()
    }

    pub fn b(&self) -> &ScalarField {
        &self.b
    }

    pub fn potential(&self) -> &OneFormField {
        &self.potential
    }

    pub fn g_norm(&self, x: &Point, v: &Vector) -> f64 {
        self.riemann.h_norm(x, v)
    }

    /// `½ g(v, v)`.
    pub fn energy(&self, x: &Point, v: &Vector) -> f64 {
        0.5 * self.riemann.h().quad(&self.chart().wrap(x), v)
    }

    /// The same structure with the potential shifted by an exact form.
    pub fn with_potential(&self, potential: OneFormField) -> Result<Self, MagneticError> {
        Self::new(self.chart().clone(), self.g().clone(), self.b.clone(), Some(potential))
    }
}

/// `Y_x(v) = g⁻¹(−B v_y, B v_x)`.
pub fn lorentz_force(s: &MagneticStructure, x: &Point, v: &Vector) -> Vector {
    let q = s.chart().wrap(x);
    let b = s.b.value(&q);
    let g_inv = s.g().at(&q).try_inverse().unwrap_or_else(|| nalgebra::Matrix2::from_element(f64::NAN));
    g_inv * Vector::new(-b * v[1], b * v[0])
}

/// `D γ̇/dt = Y(γ̇)` by RK4 over parameter length `span`.
pub fn integrate_magnetic(s: &MagneticStructure, x0: Point, v0: Vector, span: f64, steps: usize) -> Result<Trajectory, MagneticError> {
    Ok(integrate_flow(
        s.chart(),
        x0,
        v0,
        span,
        steps,
        |x, u| pregeodesic_acceleration(&s.riemann, x, u) + lorentz_force(s, x, u),
        |x, u| s.g_norm(x, u),
    )?)
}

/// `F_c = √g + ω/√(2c)`.
pub fn fc_metric(s: &MagneticStructure, c: EnergyLevel) -> Result<PreRandersMetric, MagneticError> {
    Ok(PreRandersMetric::new(s.chart().clone(), s.g().clone(), s.potential.scale(1.0 / c.speed()))?)
}

/// Reparametrizes by `g`-arclength so that `g(γ̇, γ̇) = 2c`.
pub fn energy_parametrize(s: &MagneticStructure, curve: &Curve, c: EnergyLevel) -> Curve {
    let arc = curve.cumulative(|p, v| s.g_norm(p, v));
    let speed = c.speed();
    let samples = curve
        .samples()
        .iter()
        .zip(&arc)
        .map(|(sm, a)| {
            let n = s.g_norm(&sm.point, &sm.velocity);
            let velocity = if n > 0.0 { sm.velocity * (speed / n) } else { sm.velocity };
            CurveSample { t: a / speed, point: sm.point, velocity }
        })
        .collect();
    let mut out = Curve::new(samples, curve.winding, curve.closed).expect("arclength is increasing along a regular curve");
    out.winding = curve.winding;
    out
}

/// `|Dγ̇/dt − Y(γ̇)|_g` per sample, with `dγ̇/dt` from three-point
/// differences of the sampled velocities. Endpoints report `NaN`.
pub fn el_residuals(s: &MagneticStructure, curve: &Curve) -> Vec<f64> {
    let sm = curve.samples();
    (0..sm.len())
        .map(|k| {
            if k == 0 || k + 1 == sm.len() {
                return f64::NAN;
            }
            let (a, b, c) = (&sm[k - 1], &sm[k], &sm[k + 1]);
            let (h0, h1) = (b.t - a.t, c.t - b.t);
            let dv = (b.velocity - a.velocity) * (h1 / (h0 * (h0 + h1))) + (c.velocity - b.velocity) * (h0 / (h1 * (h0 + h1)));
            let r = dv - pregeodesic_acceleration(&s.riemann, &b.point, &b.velocity) - lorentz_force(s, &b.point, &b.velocity);
            s.g_norm(&b.point, &r)
        })
        .collect()
}

/// Largest of [`el_residuals`] over interior samples.
pub fn el_residual(s: &MagneticStructure, curve: &Curve) -> f64 {
    el_residuals(s, curve).into_iter().filter(|r| !r.is_nan()).fold(0.0, f64::max)
}

/// Largest pointwise distance between the direct orbit and the `F_c`
/// pre-geodesic from the same initial data at `g`-speed `√(2c)`.
pub fn fc_route_deviation(s: &MagneticStructure, c: EnergyLevel, x0: Point, heading: f64, time: f64, steps: usize) -> Result<f64, MagneticError> {
    let e = Vector::new(heading.cos(), heading.sin());
    let v0 = e * (c.speed() / s.g_norm(&x0, &e));
    let direct = integrate_magnetic(s, x0, v0, time, steps)?;
    let fc = fc_metric(s, c)?;
    let via = crate::geodesic::integrate_pregeodesic(&fc, &GeodesicProblem::new(x0, v0, time).with_steps(steps))?;
    Ok(direct
        .curve
        .samples()
        .iter()
        .zip(via.curve.samples())
        .map(|(a, b)| (a.point - b.point).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct MagneticOptions {
    /// Grid size of the hypothesis audits.
    pub audit_n: usize,
    pub stencil: Stencil,
    pub shooting: ShootingOptions,
    pub periodic: PeriodicOptions,
}

impl Default for MagneticOptions {
    fn default() -> Self {
        Self { audit_n: 32, stencil: Stencil::S16, shooting: ShootingOptions::default(), periodic: PeriodicOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct MagneticOrbit {
    /// Parametrized with `g(γ̇, γ̇) = 2c`.
    pub curve: Curve,
    pub energy: EnergyLevel,
    pub length_fc: f64,
    pub winding: Winding,
    pub el_residual: f64,
    /// Angle between closing and opening velocity, for periodic orbits.
    pub corner_angle: Option<f64>,
}

/// Loops through the base node must have `ℓ_{F_c} ≥ −ε_zero`.
fn audit_loops(fc: &PreRandersMetric, opts: &MagneticOptions) -> Result<crate::distance::DiscreteGeometry, MagneticError> {
    let g = build_graph(fc, opts.audit_n, opts.stencil)?;
    if let Some(cycle) = has_cycle_below(&g, |e| e.weight, g.eps_zero()) {
        return Err(MagneticError::Hypothesis(format!(
            "a loop of negative F_c-length exists ({} edges, F_c-length {:.4e})",
            cycle.edges.len(),
            cycle.num
        )));
    }
    Ok(g)
}

/// Connector of energy `c` from `x0` to `x1`, after auditing that loops
/// have nonnegative `F_c`-length and that the symmetrized ball reaching
/// `x1` stays off the boundary of a bounded chart.
pub fn magnetic_connect(s: &MagneticStructure, c: EnergyLevel, x0: &Point, x1: &Point, opts: &MagneticOptions) -> Result<MagneticOrbit, MagneticError> {
    let fc = fc_metric(s, c)?;
    let g = audit_loops(&fc, opts)?;
    if !s.chart().is_fully_periodic() {
        let pot = node_potential(&g)?.map_err(|_| MagneticError::Hypothesis("distance is -infinity".into()))?;
        let (a, b) = (g.grid().nearest(x0), g.grid().nearest(x1));
        let ds = symmetrized_row(&g, &pot, a);
        let r = ds[b] + g.grid_tolerance(s.chart().diameter());
        if let Some(edge) = (0..g.node_count()).find(|&i| g.grid().on_boundary(i) && ds[i] <= r) {
            let p = g.grid().point(edge);
            return Err(MagneticError::Hypothesis(format!(
                "the symmetrized ball of radius {r:.4} about the start reaches the chart boundary at ({:.3}, {:.3})",
                p[0], p[1]
            )));
        }
    }
    let hit = shoot_connect(&fc, x0, x1, &opts.shooting)?;
    let curve = energy_parametrize(s, &hit.curve, c);
    Ok(MagneticOrbit { el_residual: el_residual(s, &curve), curve, energy: c, length_fc: hit.length_f, winding: hit.winding, corner_angle: None })
}

/// Closed orbit of energy `c` in a winding class, from the `F_c` periodic
/// search, after the same loop audit.
pub fn magnetic_periodic(s: &MagneticStructure, c: EnergyLevel, winding: Winding, opts: &MagneticOptions) -> Result<MagneticOrbit, MagneticError> {
    let fc = fc_metric(s, c)?;
    audit_loops(&fc, opts)?;
    let found = crate::geodesic::periodic_search(&fc, winding, &opts.periodic)?;
    if !found.polished {
        return Err(MagneticError::Geodesic(GeodesicError::NotFound { winding }));
    }
    let curve = energy_parametrize(s, &found.curve, c);
    Ok(MagneticOrbit {
        el_residual: el_residual(s, &curve),
        curve,
        energy: c,
        length_fc: found.length_f,
        winding,
        corner_angle: Some(found.corner_angle),
    })
}

#[cfg(test)]
mod tests;
