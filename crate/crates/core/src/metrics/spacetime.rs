use crate::fields::{ChartManifold, OneFormField, Point, ScalarField, SymTensorField, Vector};
use crate::numerics::{min_eig_sym2, min_eigvec_sym2};

use super::{audit_points, MetricError, PreRandersMetric, AUDIT_LATTICE};

/// Split stationary metric `g = −β dt² + dt⊗ω + ω⊗dt + g₀` on `ℝ × S`.
#[derive(Clone, Debug)]
pub struct SOMSpacetime {
    pub chart: ChartManifold,
    pub beta: ScalarField,
    pub omega: OneFormField,
    pub g0: SymTensorField,
}

/// Riemannian metric `ḡ₀ + 2 ω̄ dt + β̄ dt²` with `∂t` Killing.
#[derive(Clone, Debug)]
pub struct KillingSubmersionMetric {
    pub chart: ChartManifold,
    pub beta_bar: ScalarField,
    pub omega_bar: OneFormField,
    pub g0_bar: SymTensorField,
}

fn check_beta(beta: &ScalarField, p: &Point) -> Result<f64, MetricError> {
    let b = beta.value(p);
    if !b.is_finite() {
        return Err(MetricError::NonFinite { x: p[0], y: p[1] });
    }
    if !(b > 0.0) {
        return Err(MetricError::BetaNotPositive { x: p[0], y: p[1], value: b });
    }
    Ok(b)
}

/// Minimum over unit vectors of `g0(v,v) + sign·ω(v)²/β` and its minimizer.
fn quadratic_floor(g0: &SymTensorField, omega: &OneFormField, beta: f64, sign: f64, p: &Point) -> (f64, Vector) {
    let m = g0.at(p);
    let w = omega.at(p);
    let a = m[(0, 0)] + sign * w[0] * w[0] / beta;
    let b = m[(0, 1)] + sign * w[0] * w[1] / beta;
    let c = m[(1, 1)] + sign * w[1] * w[1] / beta;
    let v = min_eigvec_sym2(a, b, c);
    (min_eig_sym2(a, b, c), Vector::new(v[0], v[1]))
}

impl SOMSpacetime {
    pub fn new(
        chart: ChartManifold,
        beta: ScalarField,
        omega: OneFormField,
        g0: SymTensorField,
    ) -> Result<Self, MetricError> {
        let m = Self { chart, beta, omega, g0 };
        for p in audit_points(&m.chart, AUDIT_LATTICE) {
            m.check_point(&p)?;
        }
        Ok(m)
    }

    pub fn check_point(&self, p: &Point) -> Result<(), MetricError> {
        let b = check_beta(&self.beta, p)?;
        let (value, v) = quadratic_floor(&self.g0, &self.omega, b, 1.0, p);
        if !(value > 0.0) {
            return Err(MetricError::LorentzCondition { x: p[0], y: p[1], vx: v[0], vy: v[1], value });
        }
        Ok(())
    }

    /// `g((τ, v), (τ, v))` evaluated directly from the split form.
    pub fn g(&self, x: &Point, tau: f64, v: &Vector) -> f64 {
        let q = self.chart.wrap(x);
        -self.beta.value(&q) * tau * tau + 2.0 * tau * self.omega.apply(&q, v) + self.g0.quad(&q, v)
    }
}

impl KillingSubmersionMetric {
    pub fn new(
        chart: ChartManifold,
        beta_bar: ScalarField,
        omega_bar: OneFormField,
        g0_bar: SymTensorField,
    ) -> Result<Self, MetricError> {
        let m = Self { chart, beta_bar, omega_bar, g0_bar };
        for p in audit_points(&m.chart, AUDIT_LATTICE) {
            m.check_point(&p)?;
        }
        Ok(m)
    }

    pub fn check_point(&self, p: &Point) -> Result<(), MetricError> {
        let b = check_beta(&self.beta_bar, p)?;
        let (value, v) = quadratic_floor(&self.g0_bar, &self.omega_bar, b, -1.0, p);
        if !(value > 0.0) {
            return Err(MetricError::RiemannianCondition { x: p[0], y: p[1], vx: v[0], vy: v[1], value });
        }
        Ok(())
    }

    /// `g_R((τ, v), (τ, v))`.
    pub fn g(&self, x: &Point, tau: f64, v: &Vector) -> f64 {
        let q = self.chart.wrap(x);
        self.beta_bar.value(&q) * tau * tau + 2.0 * tau * self.omega_bar.apply(&q, v) + self.g0_bar.quad(&q, v)
    }
}

/// Fermat metric `F = ω/β + √(ω²/β² + g₀/β)` in pre-Randers form:
/// `h = ω⊗ω/β² + g₀/β`, one-form `ω/β`.
pub fn fermat_from_som(m: &SOMSpacetime) -> Result<PreRandersMetric, MetricError> {
    for p in audit_points(&m.chart, AUDIT_LATTICE) {
        m.check_point(&p)?;
    }
    let w = m.omega.div_field(&m.beta);
    let h = SymTensorField::outer(&w).add(&m.g0.div_field(&m.beta));
    PreRandersMetric::new(m.chart.clone(), h, w)
}

/// The SOM spacetime with `β = 1`, the same `ω` and `g₀ = h − ω⊗ω`.
pub fn som_from_pre_randers(f: &PreRandersMetric) -> SOMSpacetime {
    SOMSpacetime {
        chart: f.chart().clone(),
        beta: ScalarField::constant(1.0),
        omega: f.omega().clone(),
        g0: f.h().sub(&SymTensorField::outer(f.omega())),
    }
}

/// `β̄ = β`, `ω̄ = −ω`, `ḡ₀ = g₀ + (2/β) ω⊗ω`.
pub fn riemannianize(m: &SOMSpacetime) -> Result<KillingSubmersionMetric, MetricError> {
    let g0_bar = m.g0.add(&SymTensorField::outer(&m.omega).div_field(&m.beta).scale(2.0));
    KillingSubmersionMetric::new(m.chart.clone(), m.beta.clone(), m.omega.neg(), g0_bar)
}

/// Inverse of [`riemannianize`]: `β = β̄`, `ω = −ω̄`, `g₀ = ḡ₀ − (2/β̄) ω̄⊗ω̄`.
pub fn lorentzianize(r: &KillingSubmersionMetric) -> Result<SOMSpacetime, MetricError> {
    let g0 = r.g0_bar.sub(&SymTensorField::outer(&r.omega_bar).div_field(&r.beta_bar).scale(2.0));
    SOMSpacetime::new(r.chart.clone(), r.beta_bar.clone(), r.omega_bar.neg(), g0)
}

/// `F(v) = −ω̄(v)/β̄ + √(−ω̄(v)²/β̄² + ḡ₀(v,v)/β̄)`.
pub fn fermat_of_submersion(r: &KillingSubmersionMetric) -> Result<PreRandersMetric, MetricError> {
    for p in audit_points(&r.chart, AUDIT_LATTICE) {
        r.check_point(&p)?;
    }
    let w = r.omega_bar.div_field(&r.beta_bar).neg();
    let h = r.g0_bar.div_field(&r.beta_bar).sub(&SymTensorField::outer(&w));
    PreRandersMetric::new(r.chart.clone(), h, w)
}
