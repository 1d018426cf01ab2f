use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::chart::{ChartManifold, Covector, Point, Sym2, Vector, DIM};
use super::expr::{self, Expr, ParseError};

type EvalFn<T> = Arc<dyn Fn(&Point) -> T + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field `{label}` is not finite at ({x}, {y})")]
    NonFinite { label: String, x: f64, y: f64 },
}

/// Value and first derivatives of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vector,
    /// True when the gradient came from central differences.
    pub finite_difference: bool,
}

/// A smooth real function on the chart with an optional analytic gradient.
///
/// Fields built from expressions keep the expression tree, so derived fields
/// (sums, products, quotients) stay printable and symbolically differentiable.
#[derive(Clone)]
pub struct ScalarField {
    eval: EvalFn<f64>,
    grad: Option<EvalFn<Vector>>,
    expr: Option<Arc<Expr>>,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        Self::from_expr(Expr::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Coordinate function `x` (axis 0) or `y` (axis 1).
    pub fn coordinate(axis: usize) -> Self {
        Self::from_expr(Expr::Var(axis))
    }

    pub fn from_expr(e: Expr) -> Self {
        let label = e.to_string();
        let dx = e.diff(0);
        let dy = e.diff(1);
        let e = Arc::new(e);
        let value = e.clone();
        Self {
            eval: Arc::new(move |p: &Point| value.eval(p[0], p[1])),
            grad: Some(Arc::new(move |p: &Point| Vector::new(dx.eval(p[0], p[1]), dy.eval(p[0], p[1])))),
            expr: Some(e),
            label,
        }
    }

    pub fn parse(src: &str, constants: &BTreeMap<String, f64>) -> Result<Self, ParseError> {
        Expr::parse_with(src, constants).map(Self::from_expr)
    }

    /// Closure-backed field; gradients fall back to finite differences.
    pub fn from_fn(label: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), grad: None, expr: None, label: label.into() }
    }

    pub fn with_gradient(mut self, g: impl Fn(&Point) -> Vector + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_deref()
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.expr.as_ref().and_then(|e| e.as_const())
    }

    #[inline]
    pub fn value(&self, p: &Point) -> f64 {
        (self.eval)(p)
    }

    /// Gradient at `p`, analytic when available, otherwise central
    /// differences with the chart's default step (wrapped on periodic axes).
    pub fn gradient(&self, chart: &ChartManifold, p: &Point) -> (Vector, bool) {
        if let Some(g) = &self.grad {
            return (g(p), false);
        }
        (self.fd_gradient(chart, p), true)
    }

    pub fn fd_gradient(&self, chart: &ChartManifold, p: &Point) -> Vector {
        let mut g = Vector::zeros();
        for axis in 0..DIM {
            let h = chart.fd_step(axis);
            let mut plus = *p;
            let mut minus = *p;
            plus[axis] += h;
            minus[axis] -= h;
            let (plus, minus) = (chart.wrap(&plus), chart.wrap(&minus));
            g[axis] = (self.value(&plus) - self.value(&minus)) / (2.0 * h);
        }
        g
    }

    pub fn jet(&self, chart: &ChartManifold, p: &Point) -> Result<Jet, FieldError> {
        let value = self.value(p);
        let (gradient, finite_difference) = self.gradient(chart, p);
        if !value.is_finite() || !gradient.iter().all(|g| g.is_finite()) {
            return Err(FieldError::NonFinite { label: self.label.clone(), x: p[0], y: p[1] });
        }
        Ok(Jet { value, gradient, finite_difference })
    }

    fn combine(
        &self,
        other: &Self,
        sym: fn(Expr, Expr) -> Expr,
        val: fn(f64, f64) -> f64,
        grad: fn(f64, Vector, f64, Vector) -> Vector,
        op: &str,
    ) -> Self {
        if let (Some(a), Some(b)) = (&self.expr, &other.expr) {
            return Self::from_expr(sym((**a).clone(), (**b).clone()));
        }
        let (fa, fb) = (self.eval.clone(), other.eval.clone());
        let mut out = Self::from_fn(format!("({} {op} {})", self.label, other.label), move |p| {
            val(fa(p), fb(p))
        });
        if let (Some(ga), Some(gb)) = (&self.grad, &other.grad) {
            let (fa, fb, ga, gb) = (self.eval.clone(), other.eval.clone(), ga.clone(), gb.clone());
            out.grad = Some(Arc::new(move |p| grad(fa(p), ga(p), fb(p), gb(p))));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, expr::add, |a, b| a + b, |_, ga, _, gb| ga + gb, "+")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, expr::sub, |a, b| a - b, |_, ga, _, gb| ga - gb, "-")
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, expr::mul, |a, b| a * b, |a, ga, b, gb| ga * b + gb * a, "*")
    }

    pub fn div(&self, other: &Self) -> Self {
        self.combine(
            other,
            expr::div,
            |a, b| a / b,
            |a, ga, b, gb| (ga * b - gb * a) / (b * b),
            "/",
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.mul(&Self::constant(c))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }
}

/// A 1-form `ω = ω_x dx + ω_y dy`.
#[derive(Clone, Debug)]
pub struct OneFormField {
    pub comps: [ScalarField; DIM],
}

impl OneFormField {
    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        Self { comps: [x, y] }
    }

    pub fn zero() -> Self {
        Self::new(ScalarField::zero(), ScalarField::zero())
    }

    pub fn constant(x: f64, y: f64) -> Self {
        Self::new(ScalarField::constant(x), ScalarField::constant(y))
    }

    /// `df` for a scalar field with analytic or finite-difference gradient.
    pub fn exact(f: &ScalarField) -> Self {
        if let Some(e) = f.expr() {
            return Self::new(ScalarField::from_expr(e.diff(0)), ScalarField::from_expr(e.diff(1)));
        }
        let comp = |axis: usize| {
            let f = f.clone();
            match &f.grad {
                Some(g) => {
                    let g = g.clone();
                    ScalarField::from_fn(format!("d{}/d{}", f.label, axis), move |p| g(p)[axis])
                }
                None => {
                    let step = 1e-6;
                    ScalarField::from_fn(format!("d{}/d{}", f.label, axis), move |p| {
                        let mut a = *p;
                        let mut b = *p;
                        a[axis] += step;
                        b[axis] -= step;
                        (f.value(&a) - f.value(&b)) / (2.0 * step)
                    })
                }
            }
        };
        Self::new(comp(0), comp(1))
    }

    #[inline]
    pub fn at(&self, p: &Point) -> Covector {
        Covector::new(self.comps[0].value(p), self.comps[1].value(p))
    }

    #[inline]
    pub fn apply(&self, p: &Point, v: &Vector) -> f64 {
        self.at(p).dot(v)
    }

    /// `(dω)(∂x, ∂y) = ∂x ω_y − ∂y ω_x`, and whether finite differences were used.
    pub fn curl(&self, chart: &ChartManifold, p: &Point) -> (f64, bool) {
        let (gx, fx) = self.comps[0].gradient(chart, p);
        let (gy, fy) = self.comps[1].gradient(chart, p);
        (gy[0] - gx[1], fx || fy)
    }

    /// Partial derivatives: row `i` is `∂_i ω`.
    pub fn partials(&self, chart: &ChartManifold, p: &Point) -> [Covector; DIM] {
        let (gx, _) = self.comps[0].gradient(chart, p);
        let (gy, _) = self.comps[1].gradient(chart, p);
        [Covector::new(gx[0], gy[0]), Covector::new(gx[1], gy[1])]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.comps[0].add(&o.comps[0]), self.comps[1].add(&o.comps[1]))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.comps[0].sub(&o.comps[0]), self.comps[1].sub(&o.comps[1]))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.comps[0].scale(c), self.comps[1].scale(c))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn mul_field(&self, f: &ScalarField) -> Self {
        Self::new(self.comps[0].mul(f), self.comps[1].mul(f))
    }

    pub fn div_field(&self, f: &ScalarField) -> Self {
        Self::new(self.comps[0].div(f), self.comps[1].div(f))
    }
}

/// A symmetric 2-tensor with components `xx`, `xy`, `yy`.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl SymTensorField {
    pub fn new(xx: ScalarField, xy: ScalarField, yy: ScalarField) -> Self {
        Self { xx, xy, yy }
    }

    pub fn euclidean() -> Self {
        Self::constant(1.0, 0.0, 1.0)
    }

    pub fn constant(xx: f64, xy: f64, yy: f64) -> Self {
        Self::new(ScalarField::constant(xx), ScalarField::constant(xy), ScalarField::constant(yy))
    }

    /// `a ⊗ b + b ⊗ a` halved, i.e. the symmetric product.
    pub fn sym_product(a: &OneFormField, b: &OneFormField) -> Self {
        let [ax, ay] = &a.comps;
        let [bx, by] = &b.comps;
        Self::new(ax.mul(bx), ax.mul(by).add(&ay.mul(bx)).scale(0.5), ay.mul(by))
    }

    pub fn outer(a: &OneFormField) -> Self {
        Self::sym_product(a, a)
    }

    #[inline]
    pub fn at(&self, p: &Point) -> Sym2 {
        let xy = self.xy.value(p);
        Sym2::new(self.xx.value(p), xy, xy, self.yy.value(p))
    }

    #[inline]
    pub fn quad(&self, p: &Point, v: &Vector) -> f64 {
        let m = self.at(p);
        m[(0, 0)] * v[0] * v[0] + 2.0 * m[(0, 1)] * v[0] * v[1] + m[(1, 1)] * v[1] * v[1]
    }

    /// `[∂x h, ∂y h]`.
    pub fn partials(&self, chart: &ChartManifold, p: &Point) -> [Sym2; DIM] {
        let (gxx, _) = self.xx.gradient(chart, p);
        let (gxy, _) = self.xy.gradient(chart, p);
        let (gyy, _) = self.yy.gradient(chart, p);
        let make = |a: usize| Sym2::new(gxx[a], gxy[a], gxy[a], gyy[a]);
        [make(0), make(1)]
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.xx.has_analytic_gradient() && self.xy.has_analytic_gradient() && self.yy.has_analytic_gradient()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.xx.add(&o.xx), self.xy.add(&o.xy), self.yy.add(&o.yy))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.xx.sub(&o.xx), self.xy.sub(&o.xy), self.yy.sub(&o.yy))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.xx.scale(c), self.xy.scale(c), self.yy.scale(c))
    }

    pub fn mul_field(&self, f: &ScalarField) -> Self {
        Self::new(self.xx.mul(f), self.xy.mul(f), self.yy.mul(f))
    }

    pub fn div_field(&self, f: &ScalarField) -> Self {
        Self::new(self.xx.div(f), self.xy.div(f), self.yy.div(f))
    }
}

/// Value and gradient of `field` at `x`, analytic when supplied.
pub fn finite_diff_jet(chart: &ChartManifold, field: &ScalarField, x: &Point) -> Result<Jet, FieldError> {
    chart.check_contains(x).map_err(|_| FieldError::NonFinite {
        label: field.label.clone(),
        x: x[0],
        y: x[1],
    })?;
    field.jet(chart, &chart.wrap(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn polynomial_jet_by_differences() {
        let chart = ChartManifold::plane((-2.0, 2.0), (-2.0, 2.0)).unwrap();
        let f = ScalarField::from_fn("x^2", |q| q[0] * q[0]);
        let j = finite_diff_jet(&chart, &f, &p(1.0, 0.0)).unwrap();
        assert!(j.finite_difference);
        assert_eq!(j.value, 1.0);
        assert!((j.gradient - Vector::new(2.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn constant_gradient_is_exactly_zero() {
        let chart = ChartManifold::unit_torus();
        let f = ScalarField::from_fn("c", |_| 3.5);
        let j = finite_diff_jet(&chart, &f, &p(0.2, 0.9)).unwrap();
        assert_eq!(j.gradient, Vector::zeros());
        let g = ScalarField::constant(3.5);
        assert_eq!(g.jet(&chart, &p(0.2, 0.9)).unwrap().gradient, Vector::zeros());
    }

    #[test]
    fn sine_gradient_on_torus_matches_analytic_oracle() {
        let chart = ChartManifold::unit_torus();
        // d/dx sin(2πx) = 2π cos(2πx): zero at x = 3/4, −2π at x = 1/2
        let fd = ScalarField::from_fn("sin", |q| (2.0 * PI * q[0]).sin());
        let j = finite_diff_jet(&chart, &fd, &p(0.75, 0.3)).unwrap();
        assert!(j.gradient.norm() < 1e-6);
        let j = finite_diff_jet(&chart, &fd, &p(0.5, 0.3)).unwrap();
        assert!((j.gradient - Vector::new(-2.0 * PI, 0.0)).norm() < 1e-6);
        let an = ScalarField::parse("sin(2*pi*x)", &BTreeMap::new()).unwrap();
        let j = finite_diff_jet(&chart, &an, &p(0.5, 0.3)).unwrap();
        assert!(!j.finite_difference);
        assert!((j.gradient - Vector::new(-2.0 * PI, 0.0)).norm() < 1e-12);
        // the wrapped stencil at the seam sees the periodic continuation
        let j0 = finite_diff_jet(&chart, &fd, &p(0.0, 0.0)).unwrap();
        assert!((j0.gradient[0] - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn non_finite_value_reports_location() {
        let chart = ChartManifold::plane((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let f = ScalarField::parse("1/x", &BTreeMap::new()).unwrap();
        let err = finite_diff_jet(&chart, &f, &p(0.0, 0.5)).unwrap_err();
        assert_eq!(err, FieldError::NonFinite { label: "(1 / x)".into(), x: 0.0, y: 0.5 });
    }

    #[test]
    fn analytic_and_difference_gradients_agree() {
        let chart = ChartManifold::unit_torus();
        let consts = BTreeMap::new();
        let an = ScalarField::parse("0.3 + 0.1*sin(2*pi*y) * cos(2*pi*x)", &consts).unwrap();
        let e = an.clone();
        let fd = ScalarField::from_fn("fd", move |q| e.value(q));
        let delta = chart.fd_step(0);
        for k in 0..50 {
            let q = p(0.02 * k as f64, 0.37 + 0.011 * k as f64);
            let (ga, _) = an.gradient(&chart, &q);
            let (gf, flagged) = fd.gradient(&chart, &q);
            assert!(flagged);
            assert!((ga - gf).norm() <= 10.0 * delta * delta);
        }
    }

    #[test]
    fn mixed_arithmetic_propagates_gradients() {
        let chart = ChartManifold::plane((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let a = ScalarField::parse("x*y", &BTreeMap::new()).unwrap();
        let b = ScalarField::from_fn("2+x", |q| 2.0 + q[0]).with_gradient(|_| Vector::new(1.0, 0.0));
        let q = p(0.3, -0.4);
        let quotient = a.div(&b);
        let (g, fd) = quotient.gradient(&chart, &q);
        assert!(!fd);
        let expect = Vector::new((-0.4 * 2.3 - 0.3 * -0.4) / 2.3f64.powi(2), 0.3 / 2.3);
        assert!((g - expect).norm() < 1e-14);
        let symbolic = a.mul(&ScalarField::coordinate(1));
        assert_eq!(symbolic.expr().map(|e| e.to_string()), Some("((x * y) * y)".into()));
    }

    #[test]
    fn one_form_curl_of_rotation_potential() {
        let chart = ChartManifold::plane((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let w = OneFormField::new(ScalarField::zero(), ScalarField::coordinate(0).neg());
        assert_eq!(w.curl(&chart, &p(0.1, 0.2)), (-1.0, false));
        let df = OneFormField::exact(&ScalarField::parse("x^2*y", &BTreeMap::new()).unwrap());
        assert!(df.curl(&chart, &p(0.4, -0.7)).0.abs() < 1e-14);
    }
}
