use thiserror::Error;

use crate::fields::{ChartManifold, OneFormField, Point, ScalarField, SymTensorField, Vector, DIM};
use crate::numerics::GAUSS4;

use super::{audit_points, MetricError, PreRandersMetric, SOMSpacetime, AUDIT_LATTICE};

#[derive(Debug, Clone, Copy)]
pub struct SplittingOptions {
    /// Curl residual tolerance, scaled by the magnitude of the 1-form.
    pub eps_closed: f64,
    /// Quadrature points along each fundamental loop.
    pub period_points: usize,
    /// Tolerance on agreement of the quadratic parts.
    pub eps_h: f64,
}

impl Default for SplittingOptions {
    fn default() -> Self {
        Self { eps_closed: 1e-6, period_points: 1024, eps_h: 1e-10 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlmostIsometryFailure {
    #[error("the metrics live on different charts")]
    ChartMismatch,
    #[error("F - F' is not a 1-form: h-parts differ by {residual} at ({x}, {y})")]
    HPartsDiffer { x: f64, y: f64, residual: f64 },
    #[error("omega - omega' is not closed: curl {curl} at ({x}, {y})")]
    NotClosed { x: f64, y: f64, curl: f64 },
    #[error("omega - omega' has period {period} along axis {axis}")]
    NonzeroPeriod { axis: usize, period: f64 },
}

fn sample_scale(chart: &ChartManifold, f: impl Fn(&Point) -> f64) -> f64 {
    audit_points(chart, AUDIT_LATTICE).iter().map(|p| f(p).abs()).fold(0.0, f64::max)
}

/// Changes the slice `t = 0` to `t = f(x)`: `ω^f = ω − β df`,
/// `g₀^f = g₀ + df⊗ω + ω⊗df − β df⊗df`. The Fermat metric becomes `F − df`.
pub fn change_splitting(m: &SOMSpacetime, f: &ScalarField) -> Result<SOMSpacetime, MetricError> {
    let chart = &m.chart;
    let scale = 1.0 + sample_scale(chart, |p| f.value(p));
    for axis in 0..DIM {
        if !chart.is_periodic(axis) {
            continue;
        }
        let mut shift = Vector::zeros();
        shift[axis] = chart.extent(axis);
        for p in audit_points(chart, AUDIT_LATTICE) {
            let jump = f.value(&(p + shift)) - f.value(&p);
            if jump.abs() > 1e-9 * scale {
                return Err(MetricError::NotSingleValued { axis, jump });
            }
        }
    }
    let df = OneFormField::exact(f);
    let omega = m.omega.sub(&df.mul_field(&m.beta));
    let g0 = m
        .g0
        .add(&SymTensorField::sym_product(&df, &m.omega).scale(2.0))
        .sub(&SymTensorField::outer(&df).mul_field(&m.beta));
    SOMSpacetime::new(chart.clone(), m.beta.clone(), omega, g0)
}

fn period(chart: &ChartManifold, theta: &OneFormField, axis: usize, points: usize) -> f64 {
    let base = chart.lo();
    let b = chart.bounds()[axis];
    let panels = (points / GAUSS4.nodes.len()).max(1);
    GAUSS4.composite(b.lo, b.hi, panels, |s| {
        let mut p = base;
        p[axis] = s;
        theta.comps[axis].value(&p)
    })
}

/// Recovers `f` with `F = F' + df` when `F − F'` is a closed 1-form with zero
/// periods, or reports which condition fails.
pub fn almost_isometry_residual(
    f: &PreRandersMetric,
    f_prime: &PreRandersMetric,
    opts: SplittingOptions,
) -> Result<ScalarField, AlmostIsometryFailure> {
    let chart = f.chart().clone();
    if &chart != f_prime.chart() {
        return Err(AlmostIsometryFailure::ChartMismatch);
    }
    let pts = audit_points(&chart, AUDIT_LATTICE);
    for p in &pts {
        let (h, _) = f.local(p);
        let (hp, _) = f_prime.local(p);
        let residual = (h - hp).abs().max();
        if residual > opts.eps_h * h.abs().max().max(1.0) {
            return Err(AlmostIsometryFailure::HPartsDiffer { x: p[0], y: p[1], residual });
        }
    }
    let theta = f.omega().sub(f_prime.omega());
    let min_extent = chart.extent(0).min(chart.extent(1));
    let magnitude = sample_scale(&chart, |p| theta.at(p).norm());
    let curl_tol = opts.eps_closed * (1.0 + magnitude / min_extent);
    for p in &pts {
        let (curl, _) = theta.curl(&chart, p);
        if curl.abs() > curl_tol {
            return Err(AlmostIsometryFailure::NotClosed { x: p[0], y: p[1], curl });
        }
    }
    for axis in 0..DIM {
        if chart.is_periodic(axis) {
            let per = period(&chart, &theta, axis, opts.period_points);
            if per.abs() > opts.eps_closed * (1.0 + magnitude * chart.extent(axis)) {
                return Err(AlmostIsometryFailure::NonzeroPeriod { axis, period: per });
            }
        }
    }
    let base = chart.lo();
    let integrand = theta.clone();
    let wrap = chart.clone();
    let value = move |p: &Point| {
        let q = wrap.wrap(p);
        let leg_x = GAUSS4.composite(base[0], q[0], 16, |s| integrand.comps[0].value(&Point::new(s, base[1])));
        let leg_y = GAUSS4.composite(base[1], q[1], 16, |s| integrand.comps[1].value(&Point::new(q[0], s)));
        leg_x + leg_y
    };
    let grad = theta.clone();
    let wrap = chart.clone();
    Ok(ScalarField::from_fn("potential", value).with_gradient(move |p| grad.at(&wrap.wrap(p))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::fermat_from_som;
    use std::collections::BTreeMap;

    fn euclid(chart: ChartManifold, omega: OneFormField) -> PreRandersMetric {
        PreRandersMetric::new(chart, SymTensorField::euclidean(), omega).unwrap()
    }

    #[test]
    fn constant_shift_leaves_metric_unchanged() {
        let chart = ChartManifold::unit_torus();
        let m = SOMSpacetime::new(chart, ScalarField::constant(1.3), OneFormField::constant(0.2, -0.1), SymTensorField::euclidean())
            .unwrap();
        let out = change_splitting(&m, &ScalarField::constant(4.0)).unwrap();
        let p = Point::new(0.4, 0.1);
        assert_eq!(out.omega.at(&p), m.omega.at(&p));
        assert_eq!(out.g0.at(&p), m.g0.at(&p));
    }

    #[test]
    fn linear_slice_on_plane_subtracts_df() {
        let chart = ChartManifold::plane((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let m = SOMSpacetime::new(chart, ScalarField::constant(1.0), OneFormField::zero(), SymTensorField::euclidean())
            .unwrap();
        let f = ScalarField::parse("0.2*x", &BTreeMap::new()).unwrap();
        let ff = fermat_from_som(&change_splitting(&m, &f).unwrap()).unwrap();
        for k in 0..12 {
            let a = k as f64 * 0.5235987755982988;
            let v = Vector::new(a.cos(), a.sin()) * 1.7;
            let expect = v.norm() - 0.2 * v[0];
            assert!((ff.f(&Point::new(0.3, -0.2), &v) - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn multivalued_slice_rejected_on_torus() {
        let m = SOMSpacetime::new(
            ChartManifold::unit_torus(),
            ScalarField::constant(1.0),
            OneFormField::zero(),
            SymTensorField::euclidean(),
        )
        .unwrap();
        let f = ScalarField::parse("0.2*x", &BTreeMap::new()).unwrap();
        assert!(matches!(change_splitting(&m, &f), Err(MetricError::NotSingleValued { axis: 0, .. })));
    }

    #[test]
    fn recovers_potential_on_plane() {
        let chart = ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap();
        let f = euclid(chart.clone(), OneFormField::constant(0.2, 0.0));
        let fp = euclid(chart, OneFormField::zero());
        let pot = almost_isometry_residual(&f, &fp, SplittingOptions::default()).unwrap();
        let (a, b) = (Point::new(0.1, 0.7), Point::new(0.9, 0.2));
        assert!((pot.value(&b) - pot.value(&a) - 0.2 * 0.8).abs() < 1e-14);
        let same = almost_isometry_residual(&fp, &fp, SplittingOptions::default()).unwrap();
        assert_eq!(same.value(&b), 0.0);
    }

    #[test]
    fn nonzero_period_on_torus_fails() {
        let chart = ChartManifold::unit_torus();
        let f = euclid(chart.clone(), OneFormField::constant(0.2, 0.0));
        let fp = euclid(chart, OneFormField::zero());
        match almost_isometry_residual(&f, &fp, SplittingOptions::default()) {
            Err(AlmostIsometryFailure::NonzeroPeriod { axis: 0, period }) => assert!((period - 0.2).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_closed_and_non_linear_differences_fail() {
        let chart = ChartManifold::plane((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let rot = OneFormField::new(ScalarField::zero(), ScalarField::coordinate(0));
        let f = euclid(chart.clone(), rot);
        let fp = euclid(chart.clone(), OneFormField::zero());
        assert!(matches!(
            almost_isometry_residual(&f, &fp, SplittingOptions::default()),
            Err(AlmostIsometryFailure::NotClosed { .. })
        ));
        let g = PreRandersMetric::new(chart, SymTensorField::constant(2.0, 0.0, 1.0), OneFormField::zero()).unwrap();
        assert!(matches!(
            almost_isometry_residual(&g, &fp, SplittingOptions::default()),
            Err(AlmostIsometryFailure::HPartsDiffer { .. })
        ));
    }
}
