use crate::fields::{ChartManifold, Covector, Curve, OneFormField, Point, Sym2, SymTensorField, Vector, DIM};
use crate::numerics::min_eig_sym2;

use super::{audit_points, MetricError, AUDIT_LATTICE};

/// `F(v) = √h(v,v) + ω(v)` with Riemannian `h` and an unrestricted 1-form `ω`.
#[derive(Clone, Debug)]
pub struct PreRandersMetric {
    chart: ChartManifold,
    h: SymTensorField,
    omega: OneFormField,
}

/// Pointwise data needed by the pre-geodesic flow.
#[derive(Debug, Clone, Copy)]
pub struct LocalGeometry {
    pub h: Sym2,
    pub h_inv: Sym2,
    /// `dh[k] = ∂_k h`.
    pub dh: [Sym2; DIM],
    pub omega: Covector,
    /// `dω(∂x, ∂y)`.
    pub curl: f64,
}

impl LocalGeometry {
    /// `Γ^k_ij` indexed `[k][i][j]`.
    pub fn christoffel(&self) -> [[[f64; DIM]; DIM]; DIM] {
        let mut lower = [[[0.0; DIM]; DIM]; DIM];
        for l in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    lower[l][i][j] = 0.5 * (self.dh[i][(j, l)] + self.dh[j][(i, l)] - self.dh[l][(i, j)]);
                }
            }
        }
        let mut gamma = [[[0.0; DIM]; DIM]; DIM];
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    gamma[k][i][j] = (0..DIM).map(|l| self.h_inv[(k, l)] * lower[l][i][j]).sum();
                }
            }
        }
        gamma
    }

    /// The h-skew endomorphism with `h(Y(u), w) = −dω(u, w)`.
    pub fn lorentz_y(&self, u: &Vector) -> Vector {
        // −dω(u, w) = −curl (u_x w_y − u_y w_x) = (curl u_y) w_x + (−curl u_x) w_y
        let lowered = Covector::new(self.curl * u[1], -self.curl * u[0]);
        self.h_inv * lowered
    }
}

#[inline]
pub(crate) fn quad(h: &Sym2, v: &Vector) -> f64 {
    h[(0, 0)] * v[0] * v[0] + 2.0 * h[(0, 1)] * v[0] * v[1] + h[(1, 1)] * v[1] * v[1]
}

impl PreRandersMetric {
    /// Builds the metric after auditing positive definiteness of `h` on a
    /// lattice of sample points.
    pub fn new(chart: ChartManifold, h: SymTensorField, omega: OneFormField) -> Result<Self, MetricError> {
        let m = Self { chart, h, omega };
        for p in audit_points(&m.chart, AUDIT_LATTICE) {
            m.check_point(&p)?;
        }
        Ok(m)
    }

    pub fn chart(&self) -> &ChartManifold {
        &self.chart
    }

    pub fn h(&self) -> &SymTensorField {
        &self.h
    }

    pub fn omega(&self) -> &OneFormField {
        &self.omega
    }

    /// Same `h`, one-form replaced.
    pub fn with_omega(&self, omega: OneFormField) -> Self {
        Self { chart: self.chart.clone(), h: self.h.clone(), omega }
    }

    /// The reverse metric `v ↦ F(−v)`.
    pub fn reversed(&self) -> Self {
        self.with_omega(self.omega.neg())
    }

    pub fn check_point(&self, p: &Point) -> Result<(), MetricError> {
        let (h, w) = self.local(p);
        if !h.iter().chain(w.iter()).all(|c| c.is_finite()) {
            return Err(MetricError::NonFinite { x: p[0], y: p[1] });
        }
        let min_eig = min_eig_sym2(h[(0, 0)], h[(0, 1)], h[(1, 1)]);
        if !(min_eig > 0.0) {
            return Err(MetricError::NotPositiveDefinite { x: p[0], y: p[1], min_eig });
        }
        Ok(())
    }

    /// `(h, ω)` at the wrapped point.
    #[inline]
    pub fn local(&self, p: &Point) -> (Sym2, Covector) {
        let q = self.chart.wrap(p);
        (self.h.at(&q), self.omega.at(&q))
    }

    /// `F_x(v)` with a positive-definiteness check at `x`.
    pub fn eval_f(&self, x: &Point, v: &Vector) -> Result<f64, MetricError> {
        self.check_point(x)?;
        Ok(self.f(x, v))
    }

    #[inline]
    pub fn f(&self, x: &Point, v: &Vector) -> f64 {
        let (h, w) = self.local(x);
        quad(&h, v).max(0.0).sqrt() + w.dot(v)
    }

    #[inline]
    pub fn h_norm(&self, x: &Point, v: &Vector) -> f64 {
        let q = self.chart.wrap(x);
        self.h.quad(&q, v).max(0.0).sqrt()
    }

    /// `ℓ_F` of a sampled curve.
    pub fn length(&self, c: &Curve) -> f64 {
        c.integrate(|p, v| self.f(p, v))
    }

    pub fn h_length(&self, c: &Curve) -> f64 {
        c.integrate(|p, v| self.h_norm(p, v))
    }

    pub fn omega_integral(&self, c: &Curve) -> f64 {
        c.integrate(|p, v| self.omega.apply(&self.chart.wrap(p), v))
    }

    pub fn geometry(&self, p: &Point) -> LocalGeometry {
        let q = self.chart.wrap(p);
        let h = self.h.at(&q);
        let h_inv = h.try_inverse().unwrap_or_else(|| Sym2::from_element(f64::NAN));
        let dh = self.h.partials(&self.chart, &q);
        let (curl, _) = self.omega.curl(&self.chart, &q);
        LocalGeometry { h, h_inv, dh, omega: self.omega.at(&q), curl }
    }
}
