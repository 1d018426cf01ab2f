//! Pre-Randers metrics, stationary spacetimes in split form, Killing
//! submersions, and the maps between them.

mod pre_randers;
mod spacetime;
mod splitting;

pub use pre_randers::{LocalGeometry, PreRandersMetric};
pub use spacetime::{
    fermat_from_som, fermat_of_submersion, lorentzianize, riemannianize, som_from_pre_randers,
    KillingSubmersionMetric, SOMSpacetime,
};
pub use splitting::{almost_isometry_residual, change_splitting, AlmostIsometryFailure, SplittingOptions};

use thiserror::Error;

use crate::fields::{ChartManifold, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("h is not positive definite at ({x}, {y}): minimum eigenvalue {min_eig}")]
    NotPositiveDefinite { x: f64, y: f64, min_eig: f64 },
    #[error("beta must be positive, got {value} at ({x}, {y})")]
    BetaNotPositive { x: f64, y: f64, value: f64 },
    #[error("Lorentz condition fails at ({x}, {y}) along v = ({vx}, {vy}): g0(v,v) + omega(v)^2/beta = {value}")]
    LorentzCondition { x: f64, y: f64, vx: f64, vy: f64, value: f64 },
    #[error("Riemannian condition fails at ({x}, {y}) along v = ({vx}, {vy}): g0(v,v) - omega(v)^2/beta = {value}")]
    RiemannianCondition { x: f64, y: f64, vx: f64, vy: f64, value: f64 },
    #[error("f is not single-valued: increment {jump} across the period of axis {axis}")]
    NotSingleValued { axis: usize, jump: f64 },
    #[error("field is not finite at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
}

/// Points used to audit pointwise conditions: a `k × k` lattice covering the
/// chart (boundary included on non-periodic axes).
pub fn audit_points(chart: &ChartManifold, k: usize) -> Vec<Point> {
    let axis = |a: usize| -> Vec<f64> {
        let b = chart.bounds()[a];
        if chart.is_periodic(a) {
            (0..k).map(|i| b.lo + b.extent() * i as f64 / k as f64).collect()
        } else {
            (0..k).map(|i| b.lo + b.extent() * i as f64 / (k - 1) as f64).collect()
        }
    };
    let (xs, ys) = (axis(0), axis(1));
    ys.iter().flat_map(|&y| xs.iter().map(move |&x| Point::new(x, y))).collect()
}

pub(crate) const AUDIT_LATTICE: usize = 17;
