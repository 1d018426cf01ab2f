use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::fields::{ChartManifold, OneFormField, ScalarField, SymTensorField};
use crate::geodesic::integrate_pregeodesic;

fn parse(s: &str) -> ScalarField {
    ScalarField::parse(s, &Default::default()).unwrap()
}

fn plane(half: f64, b: f64) -> MagneticStructure {
    let chart = ChartManifold::plane((-half, half), (-half, half)).unwrap();
    MagneticStructure::new(chart, SymTensorField::euclidean(), ScalarField::constant(b), None).unwrap()
}

fn zero_flux_torus() -> MagneticStructure {
    MagneticStructure::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), parse("sin(2*pi*x)"), None).unwrap()
}

#[test]
fn lorentz_force_orientation() {
    let s = plane(2.0, 1.0);
    let y = lorentz_force(&s, &Point::new(0.3, 0.1), &Vector::new(1.0, 0.0));
    assert!((y - Vector::new(0.0, 1.0)).norm() < 1e-15);
    let s = plane(2.0, 0.0);
    assert_eq!(lorentz_force(&s, &Point::new(0.3, 0.1), &Vector::new(1.0, 2.0)), Vector::zeros());
}

proptest! {
    #[test]
    fn lorentz_force_is_skew(ux in -2.0f64..2.0, uy in -2.0f64..2.0, vx in -2.0f64..2.0, vy in -2.0f64..2.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let s = MagneticStructure::new(
            ChartManifold::unit_torus(),
            SymTensorField::constant(1.3, 0.2, 0.8),
            parse("0.7*sin(2*pi*x)*cos(2*pi*y)"),
            None,
        ).unwrap();
        let p = Point::new(x, y);
        let (u, v) = (Vector::new(ux, uy), Vector::new(vx, vy));
        let g = s.g().at(&p);
        let lhs = lorentz_force(&s, &p, &u).dot(&(g * v));
        let rhs = -u.dot(&(g * lorentz_force(&s, &p, &v)));
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(lorentz_force(&s, &p, &v).dot(&(g * v)).abs() < 1e-12);
        let omega = s.b().value(&p) * (ux * vy - uy * vx);
        prop_assert!((omega - lhs).abs() < 1e-12);
    }
}

#[test]
fn circular_orbits() {
    let s = plane(5.0, 1.0);
    let tr = integrate_magnetic(&s, Point::zeros(), Vector::new(1.0, 0.0), 2.0 * PI, 4096).unwrap();
    assert!(tr.curve.end().point.norm() < 1e-6);
    assert!(2.0 * tr.speed_drift < 1e-8);
    let quarter = &tr.curve.samples()[1024];
    assert!((quarter.point - Point::new(1.0, 1.0)).norm() < 1e-9, "counterclockwise");

    let tr = integrate_magnetic(&s, Point::zeros(), Vector::new(2.0, 0.0), 2.0 * PI, 4096).unwrap();
    let far = tr.curve.points().map(|p| p.norm()).fold(0.0, f64::max);
    assert!((far - 4.0).abs() < 1e-6);
    assert!(tr.curve.end().point.norm() < 1e-6);

    let s = plane(5.0, 0.0);
    let tr = integrate_magnetic(&s, Point::zeros(), Vector::new(0.6, 0.8), 2.0, 64).unwrap();
    assert!((tr.curve.end().point - Point::new(1.2, 1.6)).norm() < 1e-12);
}

#[test]
fn potentials() {
    let s = plane(2.0, 1.0);
    let p = Point::new(0.7, -0.4);
    let w = s.potential().at(&p);
    assert!(w[0].abs() < 1e-15 && (w[1] + 0.7).abs() < 1e-13);
    assert!((s.potential().curl(s.chart(), &p).0 + 1.0).abs() < 1e-12);

    let w = construct_potential(&ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap(), &ScalarField::zero()).unwrap();
    assert_eq!(w.at(&p), Vector::zeros());

    let s = zero_flux_torus();
    for x in [0.1, 0.35, 0.8] {
        let p = Point::new(x, 0.3);
        let expect = -(1.0 - (2.0 * PI * x).cos()) / (2.0 * PI);
        let w = s.potential().at(&p);
        assert!(w[0].abs() < 1e-12 && (w[1] - expect).abs() < 1e-12);
        assert!((s.potential().curl(s.chart(), &p).0 + s.b().value(&p)).abs() < 1e-10);
    }

    let uniform = construct_potential(&ChartManifold::unit_torus(), &ScalarField::constant(1.0));
    assert!(matches!(uniform, Err(MagneticError::NonzeroFlux { .. })));
    let cyl = ChartManifold::cylinder((0.0, 1.0), (0.0, 1.0)).unwrap();
    let w = construct_potential(&cyl, &ScalarField::constant(1.0)).unwrap();
    assert!((w.curl(&cyl, &Point::new(0.4, 0.6)).0 + 1.0).abs() < 1e-10);
    assert!((w.at(&Point::new(0.0, 0.6)) - w.at(&Point::new(0.999_999_999, 0.6))).norm() < 1e-6);

    let bad = MagneticStructure::new(cyl, SymTensorField::euclidean(), ScalarField::constant(1.0), Some(OneFormField::zero()));
    assert!(matches!(bad, Err(MagneticError::PotentialMismatch { .. })));
}

#[test]
fn fc_reduction() {
    let s = plane(2.0, 1.0);
    let half = EnergyLevel::new(0.5).unwrap();
    let fc = fc_metric(&s, half).unwrap();
    let (p, v) = (Point::new(0.3, 0.2), Vector::new(-0.4, 0.9));
    assert!((fc.f(&p, &v) - (v.norm() + s.potential().apply(&p, &v))).abs() < 1e-14);
    assert!(EnergyLevel::new(0.0).is_err());

    // unit-speed pre-geodesics of F_½ for B = 1 are unit circles
    let tr = integrate_pregeodesic(&fc, &GeodesicProblem::new(Point::zeros(), Vector::new(1.0, 0.0), 2.0 * PI)).unwrap();
    assert!(tr.curve.end().point.norm() < 1e-6);
    assert!(fc_route_deviation(&s, half, Point::new(0.1, -0.2), 0.7, 6.0, 4096).unwrap() < 1e-5);

    let s = MagneticStructure::new(ChartManifold::unit_torus(), SymTensorField::constant(1.2, 0.1, 0.9), parse("0.5*sin(2*pi*x)+0.3*cos(2*pi*(x+y))"), None).unwrap();
    let c = EnergyLevel::new(0.8).unwrap();
    assert!(fc_route_deviation(&s, c, Point::new(0.2, 0.7), 2.1, 3.0, 2048).unwrap() < 1e-5);
}

#[test]
fn large_energy_straightens_orbits() {
    let s = plane(25.0, 1.0);
    let c = EnergyLevel::new(50.0).unwrap();
    let fc = fc_metric(&s, c).unwrap();
    // curvature B/√(2c) = 1/10 at unit speed
    let tr = integrate_pregeodesic(&fc, &GeodesicProblem::new(Point::zeros(), Vector::new(1.0, 0.0), 20.0 * PI)).unwrap();
    assert!(tr.curve.end().point.norm() < 1e-6);
    let far = tr.curve.points().map(|p| p.norm()).fold(0.0, f64::max);
    assert!((far - 20.0).abs() < 1e-6);
}

#[test]
fn gauge_invariance() {
    let s = zero_flux_torus();
    let shifted = s.with_potential(s.potential().add(&OneFormField::exact(&parse("0.1*sin(2*pi*y)+0.05*cos(2*pi*x)")))).unwrap();
    let c = EnergyLevel::new(0.5).unwrap();
    let p = GeodesicProblem::new(Point::new(0.3, 0.4), Vector::new(0.6, 0.8), 2.5).with_steps(1024);
    let a = integrate_pregeodesic(&fc_metric(&s, c).unwrap(), &p).unwrap();
    let b = integrate_pregeodesic(&fc_metric(&shifted, c).unwrap(), &p).unwrap();
    let gap = a.curve.samples().iter().zip(b.curve.samples()).map(|(x, y)| (x.point - y.point).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-9, "{gap}");
}

#[test]
fn weak_field_connector() {
    let s = plane(1.0, 0.05);
    let c = EnergyLevel::new(0.5).unwrap();
    let (x0, x1) = (Point::new(-0.2, -0.1), Point::new(0.3, 0.2));
    let orbit = magnetic_connect(&s, c, &x0, &x1, &MagneticOptions::default()).unwrap();
    assert!(orbit.el_residual < 1e-5, "{}", orbit.el_residual);
    assert!((orbit.curve.end().point - x1).norm() < 1e-5);
    let chord = (x1 - x0).normalize();
    let off = orbit.curve.points().map(|p| {
        let d = p - x0;
        (d[0] * chord[1] - d[1] * chord[0]).abs()
    });
    assert!(off.fold(0.0, f64::max) < 0.01);
    for sm in orbit.curve.samples() {
        assert!((s.energy(&sm.point, &sm.velocity) - 0.5).abs() < 1e-9);
    }
}

#[test]
fn strong_field_refuses_far_points() {
    let s = plane(3.0, 1.0);
    let c = EnergyLevel::new(0.5).unwrap();
    let r = magnetic_connect(&s, c, &Point::new(-1.5, 0.0), &Point::new(1.5, 0.0), &MagneticOptions::default());
    assert!(matches!(r, Err(MagneticError::Hypothesis(_))), "{r:?}");
}

#[test]
fn periodic_orbit_on_zero_flux_torus() {
    let s = zero_flux_torus();
    let c = EnergyLevel::new(0.5).unwrap();
    let orbit = magnetic_periodic(&s, c, [1, 0], &MagneticOptions::default()).unwrap();
    assert!(orbit.el_residual < 1e-5, "{}", orbit.el_residual);
    assert_eq!(orbit.winding, [1, 0]);
    let vertical = magnetic_periodic(&s, c, [0, 1], &MagneticOptions::default()).unwrap();
    assert!((vertical.length_fc - (1.0 - 1.0 / PI)).abs() < 1e-6, "{}", vertical.length_fc);
    assert!(vertical.el_residual < 1e-5);
}
