use super::*;
use crate::distance::{build_graph, Stencil};
use crate::fields::{ChartManifold, OneFormField, ScalarField, SymTensorField};

fn torus(wx: f64) -> PreRandersMetric {
    PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), OneFormField::constant(wx, 0.0)).unwrap()
}

fn origin(g: &DiscreteGeometry) -> TargetSet {
    TargetSpec::Point { at: [0.0, 0.0] }.rasterize(g.grid()).unwrap()
}

#[test]
fn rho_on_flat_torus() {
    let g = build_graph(&torus(0.0), 64, Stencil::S16).unwrap();
    let c = origin(&g);
    let rho = rho_c(&g, &c).unwrap();
    assert_eq!(rho[0], 0.0);
    let mid = g.grid().nearest(&Point::new(0.5, 0.5));
    assert!((rho[mid] / 0.5f64.sqrt() - 1.0).abs() < 0.01, "{}", rho[mid]);
}

#[test]
fn rho_to_a_line_under_drift() {
    let chart = ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap();
    let m = PreRandersMetric::new(chart, SymTensorField::euclidean(), OneFormField::constant(0.5, 0.0)).unwrap();
    let n = 33;
    let g = build_graph(&m, n, Stencil::S16).unwrap();
    let line = TargetSpec::Points { at: (0..n).map(|j| [1.0, j as f64 / (n - 1) as f64]).collect() };
    let rho = rho_c(&g, &line.rasterize(g.grid()).unwrap()).unwrap();
    for j in 0..n {
        let r = rho[g.grid().index(0, j)];
        assert!((r / 1.5 - 1.0).abs() < 0.01, "{r}");
    }
}

#[test]
fn vicious_distance_collapses() {
    let chart = ChartManifold::cylinder((0.0, 1.0), (0.0, 1.0)).unwrap();
    let m = PreRandersMetric::new(chart, SymTensorField::euclidean(), OneFormField::constant(-2.0, 0.0)).unwrap();
    let g = build_graph(&m, 10, Stencil::S8).unwrap();
    let c = TargetSet::new(g.node_count(), vec![5]).unwrap();
    let rho = rho_c(&g, &c).unwrap();
    assert!(rho.iter().all(|r| *r == f64::NEG_INFINITY));
    assert_eq!(cut_locus(&g, &c).unwrap_err(), HorizonError::NegInfinity);
    assert_eq!(horizon_graph(&g, &rho, 4, 1).unwrap_err(), HorizonError::NegInfinity);
    assert_eq!(TargetSet::new(4, vec![]).unwrap_err(), HorizonError::EmptyTarget);
}

#[test]
fn segments_off_and_on_the_cut() {
    let m = torus(0.0);
    let g = build_graph(&m, 64, Stencil::S16).unwrap();
    let c = origin(&g);
    let rho = rho_c(&g, &c).unwrap();
    let eps = eps_multi(&g, &rho);
    let opts = ShootingOptions::default();

    let p = g.grid().nearest(&Point::new(0.3, 0.2));
    let segs = minimizing_segments(&g, &m, &rho, &c, p, &opts).unwrap();
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].winding, [0, 0]);
    assert!(segs[0].eq_residual <= 2.0 * eps);
    let polished = segs[0].polished.as_ref().unwrap();
    assert!((polished.length_f - g.grid().point(p).norm()).abs() < 1e-6);

    let p = g.grid().nearest(&Point::new(0.5, 0.2));
    let segs = minimizing_segments(&g, &m, &rho, &c, p, &opts).unwrap();
    assert_eq!(segs.len(), 2);
    let mut wx: Vec<i64> = segs.iter().map(|s| s.winding[0]).collect();
    wx.sort();
    assert_eq!(wx, vec![0, 1]);
    for s in &segs {
        assert!(s.eq_residual <= 2.0 * eps);
        assert!((s.length_f - rho[p]).abs() <= 2.0 * eps);
    }

    let segs = minimizing_segments(&g, &m, &rho, &c, 0, &opts).unwrap();
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].length_f, 0.0);
}

#[test]
fn flat_torus_cut_lines() {
    let g = build_graph(&torus(0.0), 64, Stencil::S16).unwrap();
    let r = cut_locus(&g, &origin(&g)).unwrap();
    assert!(r.cut_nodes.iter().all(|&p| {
        let (i, j) = g.grid().coords(p);
        i.abs_diff(32) <= 1 || j.abs_diff(32) <= 1
    }));
    for k in 0..64 {
        assert!(r.is_cut(g.grid().index(32, k)) || k == 32 && r.is_cut(g.grid().index(32, 32)));
        assert!(r.is_cut(g.grid().index(k, 32)));
    }
    assert!((r.fraction * 64.0 - 2.0).abs() < 0.2, "{}", r.fraction);
    assert_eq!(r.agreement_verdict, Verdict::Holds, "{}", r.agreement);
    assert!(r.multiplicity.iter().all(|&m| m >= 1));
    assert_eq!(r.multiplicity[g.grid().index(32, 32)], 4);
    assert!(r.inconclusive.is_empty());
}

#[test]
fn convex_chart_has_no_cut() {
    let chart = ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap();
    let m = PreRandersMetric::new(chart, SymTensorField::euclidean(), OneFormField::zero()).unwrap();
    let g = build_graph(&m, 33, Stencil::S16).unwrap();
    let c = TargetSpec::Point { at: [0.5, 0.5] }.rasterize(g.grid()).unwrap();
    let r = cut_locus(&g, &c).unwrap();
    assert!(r.cut_nodes.is_empty(), "{:?}", r.cut_nodes);
}

#[test]
fn drift_shifts_the_cut() {
    // on the row y = 0, west costs 0.8x and east costs 1.2(1 − x)
    let g = build_graph(&torus(0.2), 64, Stencil::S16).unwrap();
    let r = cut_locus(&g, &origin(&g)).unwrap();
    let row: Vec<usize> = (0..64).filter(|&i| r.is_cut(g.grid().index(i, 0))).collect();
    assert!(!row.is_empty() && row.iter().all(|&i| (i as f64 - 0.6 * 64.0).abs() <= 1.0), "{row:?}");
    for i in 0..64 {
        assert!(r.is_cut(g.grid().index(i, 32)));
    }
    assert_eq!(r.agreement_verdict, Verdict::Holds, "{}", r.agreement);
}

#[test]
fn rho_is_lipschitz_between_neighbours() {
    let w = OneFormField::new(ScalarField::parse("0.3+0.1*sin(2*pi*y)", &Default::default()).unwrap(), ScalarField::zero());
    let m = PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), w).unwrap();
    let g = build_graph(&m, 32, Stencil::S16).unwrap();
    let c = TargetSpec::Circle { center: [0.5, 0.5], radius: 0.2 }.rasterize(g.grid()).unwrap();
    let rho = rho_c(&g, &c).unwrap();
    assert!(c.nodes().iter().all(|&i| rho[i] == 0.0));
    for e in g.edges() {
        let jump = (rho[e.from as usize] - rho[e.to as usize]).abs();
        assert!(jump <= 2.0 * e.h_len + g.grid_tolerance(e.h_len));
    }
}

#[test]
fn cut_fraction_shrinks() {
    let table = refinement_table(&torus(0.0), &TargetSpec::Point { at: [0.0, 0.0] }, &[32, 64], Stencil::S16).unwrap();
    assert!(table[1].fraction <= 0.7 * table[0].fraction);
}

#[test]
fn horizon_is_achronal() {
    let chart = ChartManifold::plane((0.0, 1.0), (0.0, 1.0)).unwrap();
    let m = PreRandersMetric::new(chart, SymTensorField::euclidean(), OneFormField::constant(0.5, 0.0)).unwrap();
    let g = build_graph(&m, 25, Stencil::S16).unwrap();
    let c = TargetSpec::Point { at: [0.5, 0.5] }.rasterize(g.grid()).unwrap();
    let rho = rho_c(&g, &c).unwrap();
    let h = horizon_graph(&g, &rho, 6, 7).unwrap();
    assert!(h.worst_gap <= 1e-12);
    assert_eq!(h.time[c.nodes()[0]], 0.0);
}
