use proptest::prelude::*;

use super::*;
use crate::causality::{classify_ladder, LadderOptions};
use crate::distance::{build_graph, node_potential, pre_distance, Sources, Stencil};
use crate::fields::{ChartManifold, ScalarField};
use crate::metrics::fermat_from_som;

fn flat_torus(theta_x: f64) -> PreRandersMetric {
    PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), OneFormField::constant(-theta_x, 0.0)).unwrap()
}

#[test]
fn efficiency_of_straight_loop() {
    let m = flat_torus(0.3);
    let data = DriftData::from_pre_randers(&m);
    let c = Curve::segment(Point::new(0.2, 0.4), Vector::new(1.0, 0.0), 64);
    let e = efficiency(&c, &data, m.chart()).unwrap();
    assert!((e.eff - 0.3).abs() < 1e-12);
    assert!((e.l_theta - 0.7).abs() < 1e-12);
    assert!((e.l_theta - m.length(&c)).abs() < 1e-12);
    let r = efficiency(&c.reversed(), &data, m.chart()).unwrap();
    assert!((r.eff + 0.3).abs() < 1e-12);
    assert!((r.l_theta - 1.3).abs() < 1e-12);
    let point = Curve::segment(Point::new(0.2, 0.4), Vector::zeros(), 4);
    assert_eq!(efficiency(&point, &data, m.chart()), Err(HarrisError::ZeroLength));
}

#[test]
fn drift_data_reproduces_fermat_metric() {
    let m = SOMSpacetime::new(
        ChartManifold::unit_torus(),
        ScalarField::parse("2+0.5*sin(2*pi*x)", &Default::default()).unwrap(),
        OneFormField::constant(0.4, -0.3),
        SymTensorField::constant(1.2, 0.1, 0.9),
    )
    .unwrap();
    let f = fermat_from_som(&m).unwrap();
    let data = DriftData::from_som(&m);
    for (p, v) in [((0.1, 0.2), (1.0, 0.0)), ((0.7, 0.3), (-0.4, 1.1)), ((0.5, 0.9), (0.0, -2.0))] {
        let (p, v) = (Point::new(p.0, p.1), Vector::new(v.0, v.1));
        assert!((data.fermat(&p, &v) - f.f(&p, &v)).abs() < 1e-10);
    }
}

#[test]
fn flat_torus_weight_and_case_six() {
    let m = flat_torus(0.6);
    let g = build_graph(&m, 16, Stencil::S16).unwrap();
    let w = weight(&g);
    assert!(w.converged);
    assert!((w.wt - 0.6).abs() < 1e-12, "{}", w.wt);
    assert_eq!(w.cycle_winding[1], 0);
    assert!((weight_by_bisection(&g, 1e-10) - w.wt).abs() < 1e-8);
    let r = harris_classify(&g, &m, None);
    assert_eq!(r.case, HarrisCase::Six);
    assert!(r.bridge_holds && !r.marginal);
}

#[test]
fn cylinder_weight_two_is_vicious() {
    let chart = ChartManifold::cylinder((0.0, 1.0), (0.0, 1.0)).unwrap();
    let m = PreRandersMetric::new(chart, SymTensorField::euclidean(), OneFormField::constant(-2.0, 0.0)).unwrap();
    let g = build_graph(&m, 12, Stencil::S16).unwrap();
    let w = weight(&g);
    assert!((w.wt - 2.0).abs() < 1e-12);
    assert_eq!(w.cycle_winding, [1, 0]);
    assert!((weight_by_bisection(&g, 1e-10) - 2.0).abs() < 1e-8);
    let d = pre_distance(&g, Sources::All).unwrap();
    let ladder = classify_ladder(&d, &g, &m, &LadderOptions::default());
    let r = harris_classify(&g, &m, Some(&ladder));
    assert_eq!(r.case, HarrisCase::One);
    assert_eq!(r.routes_agree, Some(true));
    assert!(r.bridge_holds);
}

#[test]
fn unit_drift_has_zero_loop() {
    let m = flat_torus(1.0);
    let g = build_graph(&m, 16, Stencil::S16).unwrap();
    let r = harris_classify(&g, &m, None);
    assert!((r.weight.wt - 1.0).abs() < 1e-12);
    assert_eq!(r.case, HarrisCase::Two);
    assert!(r.marginal && r.bridge_holds);
    assert!(r.delta_ladder.iter().all(|row| row.min_l_theta.unwrap().abs() < 1e-12));
}

#[test]
fn symmetrized_ball_inside_h_ball() {
    let w = OneFormField::new(ScalarField::parse("0.3+0.1*sin(2*pi*y)", &Default::default()).unwrap(), ScalarField::zero());
    let m = PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), w).unwrap();
    let g = build_graph(&m, 16, Stencil::S16).unwrap();
    let pot = node_potential(&g).unwrap().unwrap();
    for x in [0, 37, 200] {
        assert!(ball_inclusion_defect(&g, &pot, x) <= 1e-12);
    }
}

#[test]
fn diamond_projects_to_symmetrized_ball() {
    let chart = ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap();
    let m = PreRandersMetric::new(chart, SymTensorField::euclidean(), OneFormField::constant(0.5, 0.0)).unwrap();
    let g = build_graph(&m, 33, Stencil::S16).unwrap();
    let x0 = g.grid().nearest(&Point::new(0.5, 0.5));
    let d = pre_distance(&g, Sources::Nodes(vec![x0])).unwrap();
    assert!(diamond_mismatch(&d, &g, x0, 0.0, 0.6, 400).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn weight_scales_linearly(c in 0.1f64..3.0, a in -0.8f64..0.8) {
        let w = OneFormField::new(
            ScalarField::parse(&format!("{a}+0.2*cos(2*pi*y)"), &Default::default()).unwrap(),
            ScalarField::constant(0.1),
        );
        let m = PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), w.clone()).unwrap();
        let base = weight(&build_graph(&m, 8, Stencil::S8).unwrap()).wt;
        let scaled = weight(&build_graph(&m.with_omega(w.scale(c)), 8, Stencil::S8).unwrap()).wt;
        prop_assert!((scaled - c * base).abs() < 1e-9 * (1.0 + c * base.abs()));
    }
}
