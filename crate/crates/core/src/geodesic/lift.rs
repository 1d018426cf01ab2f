use crate::fields::{Curve, Point, Vector, Winding};
use crate::metrics::PreRandersMetric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeSample {
    pub s: f64,
    pub tau: f64,
    pub point: Point,
    pub tau_dot: f64,
    pub velocity: Vector,
}

/// A curve `s ↦ (τ(s), x(s))` in `ℝ × S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeCurve {
    pub samples: Vec<SpacetimeSample>,
    pub winding: Winding,
}

/// Lightlike lift `τ(s) = t₀ + ∫ F(ẋ)`, lightlike for the spacetime with
/// `β = 1` and `g₀ = h − ω⊗ω`.
pub fn lift_lightlike(curve: &Curve, m: &PreRandersMetric, t0: f64) -> SpacetimeCurve {
    let tau = curve.cumulative(|p, v| m.f(p, v));
    let samples = curve
        .samples()
        .iter()
        .zip(tau)
        .map(|(s, t)| SpacetimeSample {
            s: s.t,
            tau: t0 + t,
            point: s.point,
            tau_dot: m.f(&s.point, &s.velocity),
            velocity: s.velocity,
        })
        .collect();
    SpacetimeCurve { samples, winding: curve.winding }
}

impl SpacetimeCurve {
    pub fn start_tau(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.tau)
    }

    pub fn end_tau(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.tau)
    }

    /// Largest `|g(γ̇, γ̇)| / (τ̇² + h(ẋ, ẋ))` over the samples, where
    /// `g((τ̇, ẋ), (τ̇, ẋ)) = −τ̇² + 2τ̇ ω(ẋ) + h(ẋ, ẋ) − ω(ẋ)²`.
    pub fn lightlike_residual(&self, m: &PreRandersMetric) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let (h, w) = m.local(&s.point);
                let hv = s.velocity.dot(&(h * s.velocity));
                let wv = w.dot(&s.velocity);
                let g = -s.tau_dot * s.tau_dot + 2.0 * s.tau_dot * wv + hv - wv * wv;
                let norm = s.tau_dot * s.tau_dot + hv;
                if norm > 0.0 {
                    g.abs() / norm
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}
