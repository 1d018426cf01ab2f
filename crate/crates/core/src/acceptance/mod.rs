//! The acceptance suite: nine criteria, each a pass/fail verdict with the
//! measured figures. Shared by the `selftest` subcommand and the
//! `acceptance` test target.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::causality::{classify_ladder, LadderOptions, Verdict};
use crate::distance::{build_graph, pre_distance, scan_nodes, symmetrized, DiscreteGeometry, PreDistanceResult, Sources, Stencil, SymmetrizedDistance};
use crate::fields::{ChartManifold, OneFormField, Point, ScalarField, SymTensorField, Vector};
use crate::harris::{ball_inclusion_defect, diamond_mismatch, harris_classify, weight, HarrisCase};
use crate::horizon::{cut_locus, TargetSpec};
use crate::magnetic::{fc_route_deviation, integrate_magnetic, EnergyLevel, MagneticStructure};
use crate::metrics::{
    almost_isometry_residual, change_splitting, fermat_from_som, lorentzianize, riemannianize, som_from_pre_randers, PreRandersMetric, SOMSpacetime,
    SplittingOptions,
};
use crate::scenario::{builtin_names, MetricSource, Resolved};

/// Absolute band of the exact-form distance oracle.
pub const DISTANCE_BAND: f64 = 0.015;
/// Total randomized cases required of the property suites.
pub const PROPERTY_CASES: usize = 100_000;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} ({:.1} s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub budget: Duration,
    run: fn(&mut Checks) -> Result<(), String>,
}

pub const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, name: "exact_form_distance", budget: Duration::from_secs(30), run: exact_form_distance },
    Criterion { id: 2, name: "vicious_detection", budget: Duration::from_secs(10), run: vicious_detection },
    Criterion { id: 3, name: "g2_torus", budget: Duration::from_secs(60), run: g2_torus },
    Criterion { id: 4, name: "randers_torus", budget: Duration::from_secs(60), run: randers_torus },
    Criterion { id: 5, name: "magnetic_equivalence", budget: Duration::from_secs(5), run: magnetic_equivalence },
    Criterion { id: 6, name: "roundtrip_identities", budget: Duration::from_secs(10), run: roundtrip_identities },
    Criterion { id: 7, name: "cut_locus", budget: Duration::from_secs(120), run: cut_locus_torus },
    Criterion { id: 8, name: "bridge_invariants", budget: Duration::from_secs(60), run: bridge_invariants },
    Criterion { id: 9, name: "property_suites", budget: Duration::from_secs(120), run: property_suites },
];

#[derive(Default)]
pub struct Checks {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failures.push(what.clone());
        }
        self.notes.push(what);
    }
}

pub fn run(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let mut checks = Checks::default();
    let result = (c.run)(&mut checks);
    let elapsed = start.elapsed();
    if let Err(e) = result {
        checks.failures.push(format!("error: {e}"));
    }
    if elapsed > c.budget {
        checks.failures.push(format!("runtime {:.1} s over the {} s budget", elapsed.as_secs_f64(), c.budget.as_secs()));
    }
    let passed = checks.failures.is_empty();
    let detail = if passed { checks.notes.join("; ") } else { checks.failures.join("; ") };
    Outcome { id: c.id, name: c.name, passed, detail, elapsed }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(run).collect()
}

fn builtin(name: &str) -> Resolved {
    Resolved::builtin(name).expect("built-in scenario")
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

fn node_at(g: &DiscreteGeometry, p: [f64; 2]) -> usize {
    g.grid().nearest(&Point::new(p[0], p[1]))
}

fn oracle_errors(m: &PreRandersMetric, n: usize) -> Result<(f64, f64), String> {
    let g = build_graph(m, n, Stencil::S16).map_err(err)?;
    let (o, e) = (node_at(&g, [0.0, 0.0]), node_at(&g, [1.0, 0.0]));
    let d = pre_distance(&g, Sources::Nodes(vec![o, e])).map_err(err)?;
    let fwd = d.get(o, e).ok_or("missing row")?;
    let back = d.get(e, o).ok_or("missing row")?;
    Ok((fwd, back))
}

fn exact_form_distance(c: &mut Checks) -> Result<(), String> {
    let r = builtin("plane_drift_05");
    let (f64_, b64) = oracle_errors(&r.metric, 64)?;
    c.check((1.485..=1.515).contains(&f64_), format!("N=64 d(0,1) = {f64_:.6}"));
    c.check((0.495..=0.505).contains(&b64), format!("d(1,0) = {b64:.6}"));
    let (f128, b128) = oracle_errors(&r.metric, 128)?;
    let e64 = (f64_ - 1.5).abs().max((b64 - 0.5).abs());
    let e128 = (f128 - 1.5).abs().max((b128 - 0.5).abs());
    // Axis-aligned paths are exact on the stencil; the error sits at round-off.
    c.check(e128 <= (e64 / 1.7).max(1e-12), format!("error {e64:.1e} at N=64, {e128:.1e} at N=128"));
    Ok(())
}

fn vicious_detection(c: &mut Checks) -> Result<(), String> {
    let r = builtin("vicious_cylinder");
    let g = build_graph(&r.metric, r.scenario.numerics.n, r.scenario.numerics.stencil).map_err(err)?;
    let d = pre_distance(&g, Sources::All).map_err(err)?;
    let Some(w) = d.witness() else {
        c.check(false, "distance is finite");
        return Ok(());
    };
    c.check(w.weight <= -0.9, format!("NEG_INFINITY, witness l_F = {:.4} winding {:?}", w.weight, w.winding));
    let ladder = classify_ladder(&d, &g, &r.metric, &LadderOptions::default());
    c.check(ladder.totally_vicious.verdict == Verdict::Holds, format!("totally vicious {}", ladder.totally_vicious.verdict));
    let h = harris_classify(&g, &r.metric, Some(&ladder));
    c.check((h.weight.wt - 2.0).abs() <= 0.02, format!("wt = {:.5}", h.weight.wt));
    c.check(h.routes_agree == Some(true), format!("routes agree: {:?}", h.routes_agree));
    Ok(())
}

fn g2_torus(c: &mut Checks) -> Result<(), String> {
    let r = builtin("paper_g2_torus");
    let a = r.scenario.constants["a"];
    let minus_dx = Vector::new(1.0 - 2.0 * a, 5.0 * a - 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(r.scenario.numerics.seed);
    let worst = (0..1000)
        .map(|_| r.metric.f(&Point::new(rng.gen(), rng.gen()), &minus_dx).abs())
        .fold(0.0, f64::max);
    c.check(worst <= 1e-14, format!("max |F(-dx)| = {worst:.1e} over 1000 points"));

    let g = build_graph(&r.metric, r.scenario.numerics.n, r.scenario.numerics.stencil).map_err(err)?;
    let d = pre_distance(&g, Sources::Nodes(vec![])).map_err(err)?;
    let Some(f) = d.finite() else {
        c.check(false, "distance is NEG_INFINITY");
        return Ok(());
    };
    let eps = g.eps_zero();
    let scan = scan_nodes(&g, f.potential());
    c.check(scan.max_abs_df <= eps, format!("max |d_F| = {:.2e} <= eps_zero {eps:.2e}", scan.max_abs_df));
    let ladder = classify_ladder(&d, &g, &r.metric, &LadderOptions { seed: r.scenario.numerics.seed, ..Default::default() });
    c.check(ladder.chronological.verdict == Verdict::Holds, format!("chronological {}", ladder.chronological.verdict));
    c.check(ladder.causal.verdict == Verdict::Fails, format!("causal {}", ladder.causal.verdict));
    // The reduced basis maps winding (p, q) to the displacement below; the
    // witness must run along the null direction -dx.
    let w = ladder.cycle_winding.unwrap_or([0, 0]);
    let (p, q) = (w[0] as f64, w[1] as f64);
    let (dx, dy) = (-5.0 * p - 2.0 * q, (2.0 - 5.0 * a) * p + (1.0 - 2.0 * a) * q);
    c.check(dx < 0.0 && dy.abs() <= 0.05 * dx.abs(), format!("zero cycle winding {w:?}, displacement ({dx}, {dy:.4})"));
    c.check(ladder.distinguishing.verdict == Verdict::Fails, format!("distinguishing {}", ladder.distinguishing.verdict));
    let wt = weight(&g).wt;
    c.check((wt - 1.0).abs() <= 1e-3, format!("wt = {wt:.6}"));
    Ok(())
}

fn randers_torus(c: &mut Checks) -> Result<(), String> {
    let r = builtin("randers_torus");
    let g = build_graph(&r.metric, r.scenario.numerics.n, r.scenario.numerics.stencil).map_err(err)?;
    let d = pre_distance(&g, Sources::Nodes(vec![])).map_err(err)?;
    let Some(f) = d.finite() else {
        c.check(false, "distance is NEG_INFINITY");
        return Ok(());
    };
    let ladder = classify_ladder(&d, &g, &r.metric, &LadderOptions { seed: r.scenario.numerics.seed, ..Default::default() });
    c.check(ladder.globally_hyperbolic.verdict == Verdict::Holds, format!("globally hyperbolic {}", ladder.globally_hyperbolic.verdict));
    let scan = scan_nodes(&g, f.potential());
    c.check(scan.min_offdiag_ds > 0.0, format!("min off-diagonal d_s = {:.4e}", scan.min_offdiag_ds));
    let h = harris_classify(&g, &r.metric, Some(&ladder));
    c.check(h.case == HarrisCase::Six && h.weight.wt < 1.0, format!("{} with wt = {:.4}", h.case, h.weight.wt));
    c.check(h.routes_agree == Some(true), format!("routes agree: {:?}", h.routes_agree));
    Ok(())
}

fn magnetic_parts(r: &Resolved) -> (&MagneticStructure, EnergyLevel) {
    match &r.source {
        MetricSource::Magnetic(s, e) => (s, *e),
        _ => unreachable!("magnetic built-in"),
    }
}

fn magnetic_equivalence(c: &mut Checks) -> Result<(), String> {
    let r = builtin("magnetic_constant_B");
    let (s, energy) = magnetic_parts(&r);
    let task = &r.scenario.task;
    let from = task.from.unwrap_or([0.0, 0.0]);
    let x0 = Point::new(from[0], from[1]);
    let heading = task.heading.unwrap_or(0.0);
    let b = s.b().value(&x0);
    let period = TAU / b.abs();
    let steps = 4096;
    let dev = fc_route_deviation(s, energy, x0, heading, period, steps).map_err(err)?;
    c.check(dev <= 1e-5, format!("F_c route deviation {dev:.1e}"));

    let v0 = Vector::new(heading.cos(), heading.sin()) * energy.speed();
    let orbit = integrate_magnetic(s, x0, v0, period, steps).map_err(err)?;
    let radius = energy.speed() / b.abs();
    let center = x0 + Vector::new(-v0[1], v0[0]) * (radius / (energy.speed() * b.signum()));
    let mut radius_err: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for sm in orbit.curve.samples() {
        radius_err = radius_err.max(((sm.point - center).norm() - radius).abs());
        drift = drift.max((s.energy(&sm.point, &sm.velocity) - energy.value()).abs());
    }
    c.check((radius - 1.0).abs() <= 1e-6 && radius_err <= 1e-6, format!("radius {radius} with sample error {radius_err:.1e}"));
    c.check(drift <= 1e-8, format!("energy drift {drift:.1e}"));
    Ok(())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn random_point(rng: &mut ChaCha8Rng, chart: &ChartManifold) -> Point {
    let b = chart.bounds();
    Point::new(rng.gen_range(b[0].lo..b[0].hi), rng.gen_range(b[1].lo..b[1].hi))
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vector {
    Vector::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
}

fn roundtrip_identities(c: &mut Checks) -> Result<(), String> {
    const SAMPLES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let f = builtin("randers_torus").metric;
    let back = fermat_from_som(&som_from_pre_randers(&f)).map_err(err)?;
    let bad = (0..SAMPLES)
        .filter(|_| {
            let (x, v) = (random_point(&mut rng, f.chart()), random_vector(&mut rng));
            !rel_close(f.f(&x, &v), back.f(&x, &v), 1e-12)
        })
        .count();
    c.check(bad == 0, format!("fermat(som(F)) = F at {SAMPLES} samples, {bad} off"));

    let beta = ScalarField::parse("1.5+0.5*sin(2*pi*x)", &Default::default()).map_err(err)?;
    let omega = OneFormField::new(ScalarField::parse("0.3*cos(2*pi*y)", &Default::default()).map_err(err)?, ScalarField::constant(0.2));
    let som = SOMSpacetime::new(ChartManifold::unit_torus(), beta, omega, SymTensorField::constant(1.0, 0.1, 0.8)).map_err(err)?;
    let again = lorentzianize(&riemannianize(&som).map_err(err)?).map_err(err)?;
    let bad = (0..SAMPLES)
        .filter(|_| {
            let (x, v, tau) = (random_point(&mut rng, &som.chart), random_vector(&mut rng), rng.gen_range(-2.0..2.0));
            !rel_close(som.g(&x, tau, &v), again.g(&x, tau, &v), 1e-12)
        })
        .count();
    c.check(bad == 0, format!("lorentzianize(riemannianize(g)) = g at {SAMPLES} samples, {bad} off"));

    let shift = ScalarField::parse("0.05*sin(2*pi*x)*cos(2*pi*y)", &Default::default()).map_err(err)?;
    let df = OneFormField::exact(&shift);
    let fermat = fermat_from_som(&som).map_err(err)?;
    let split = fermat_from_som(&change_splitting(&som, &shift).map_err(err)?).map_err(err)?;
    let worst = (0..SAMPLES)
        .map(|_| {
            let (x, v) = (random_point(&mut rng, &som.chart), random_vector(&mut rng));
            (split.f(&x, &v) - (fermat.f(&x, &v) - df.apply(&x, &v))).abs()
        })
        .fold(0.0, f64::max);
    c.check(worst <= 1e-10, format!("F^f = F - df to {worst:.1e}"));
    c.check(almost_isometry_residual(&fermat, &split, SplittingOptions::default()).is_ok(), "F^f is an almost isometry of F");

    // Graph level: d^f(a, b) = d(a, b) - f(b) + f(a).
    let n = 24;
    let g = build_graph(&fermat, n, Stencil::S16).map_err(err)?;
    let gf = build_graph(&split, n, Stencil::S16).map_err(err)?;
    let sources: Vec<usize> = (0..8).map(|_| rng.gen_range(0..g.node_count())).collect();
    let (d, df_) = (pre_distance(&g, Sources::Nodes(sources.clone())).map_err(err)?, pre_distance(&gf, Sources::Nodes(sources.clone())).map_err(err)?);
    let mut worst: f64 = 0.0;
    for &a in &sources {
        for b in 0..g.node_count() {
            let (pa, pb) = (g.grid().point(a), g.grid().point(b));
            let want = d.get(a, b).ok_or("missing row")? - shift.value(&pb) + shift.value(&pa);
            worst = worst.max((df_.get(a, b).ok_or("missing row")? - want).abs());
        }
    }
    c.check(worst <= 2.0 * DISTANCE_BAND, format!("graph-level d^f defect {worst:.1e}"));
    Ok(())
}

/// Toroidal distance of `p` to `{x = ½} ∪ {y = ½}`.
fn line_distance(p: &Point) -> f64 {
    (p[0] - 0.5).abs().min((p[1] - 0.5).abs())
}

fn cut_locus_torus(c: &mut Checks) -> Result<(), String> {
    let r = builtin("cut_torus_point");
    let target = r.scenario.task.target.clone().unwrap_or(TargetSpec::Point { at: [0.0, 0.0] });
    let stencil = r.scenario.numerics.stencil;
    let report = |n: usize| -> Result<_, String> {
        let g = build_graph(&r.metric, n, stencil).map_err(err)?;
        let set = target.rasterize(g.grid()).map_err(err)?;
        let rep = cut_locus(&g, &set).map_err(err)?;
        Ok((g, rep))
    };
    let (g, rep) = report(128)?;
    let grid = g.grid();
    let cell = grid.cell();
    let stray = rep.cut_nodes.iter().filter(|&&i| line_distance(&grid.point(i)) > cell + 1e-12).count();
    let line_nodes: Vec<usize> = (0..g.node_count()).filter(|&i| line_distance(&grid.point(i)) < 0.5 * cell).collect();
    let uncovered = line_nodes
        .iter()
        .filter(|&&i| !rep.cut_nodes.iter().any(|&j| grid.cell_distance(i, j) <= 1))
        .count();
    c.check(stray == 0 && uncovered == 0, format!("{} cut nodes, {stray} off the lines, {uncovered} line nodes uncovered", rep.cut_nodes.len()));
    let mid = node_at(&g, [0.5, 0.5]);
    let rho = rep.rho[mid];
    c.check((rho - 0.5f64.sqrt()).abs() <= 0.01 * 0.5f64.sqrt(), format!("rho(1/2, 1/2) = {rho:.5}"));
    c.check(rep.agreement >= 0.95, format!("detector agreement {:.3}", rep.agreement));
    let (_, coarse) = report(64)?;
    let shrink = 1.0 - rep.fraction / coarse.fraction;
    c.check(shrink >= 0.3, format!("cut fraction {:.4} -> {:.4}", coarse.fraction, rep.fraction));
    Ok(())
}

/// Grid size for per-scenario audits.
const BRIDGE_N: usize = 24;

fn bridge_invariants(c: &mut Checks) -> Result<(), String> {
    for name in builtin_names() {
        let r = builtin(name);
        let n = r.scenario.numerics.n.min(BRIDGE_N);
        let g = build_graph(&r.metric, n, r.scenario.numerics.stencil).map_err(err)?;
        let h = harris_classify(&g, &r.metric, None);
        c.check(h.bridge_holds, format!("{name}: bridge {}", h.bridge_holds));
        let x0 = g.grid().nearest(&r.metric.chart().center());
        let d = pre_distance(&g, Sources::Nodes(vec![x0])).map_err(err)?;
        let PreDistanceResult::Finite(f) = &d else {
            c.check(true, format!("{name}: vicious, balls are everything"));
            continue;
        };
        let defect = ball_inclusion_defect(&g, f.potential(), x0);
        c.check(defect <= 1e-12, format!("{name}: ball defect {defect:.1e}"));
        let span = 0.6 * r.metric.chart().diameter().min(1.0);
        let miss = diamond_mismatch(&d, &g, x0, 0.0, span, 200).len();
        c.check(miss == 0, format!("{name}: diamond mismatch {miss}"));
    }
    Ok(())
}

fn property_suites(c: &mut Checks) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let metrics: Vec<PreRandersMetric> = ["randers_torus", "paper_g2_torus", "plane_drift_05", "magnetic_constant_B", "magnetic_zeroflux_torus"]
        .iter()
        .map(|n| builtin(n).metric)
        .collect();
    let mut total = 0;

    let cases = 40_000;
    let mut bad = 0;
    for k in 0..cases {
        let m = &metrics[k % metrics.len()];
        let (x, v, lam) = (random_point(&mut rng, m.chart()), random_vector(&mut rng), rng.gen_range(0.0..10.0));
        if !rel_close(m.f(&x, &(v * lam)), lam * m.f(&x, &v), 1e-12) {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("homogeneity {bad}/{cases}"));
    total += cases;

    let mut bad = 0;
    for k in 0..cases {
        let m = &metrics[k % metrics.len()];
        let (x, v) = (random_point(&mut rng, m.chart()), random_vector(&mut rng));
        let defect = m.f(&x, &v) - m.f(&x, &-v);
        if !rel_close(defect, 2.0 * m.omega().apply(&x, &v), 1e-12) {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("reversibility defect {bad}/{cases}"));
    total += cases;

    let m = &metrics[0];
    let shift = ScalarField::parse("0.1*sin(2*pi*x)+0.05*cos(2*pi*(x+y))", &Default::default()).map_err(err)?;
    let g = build_graph(m, 12, Stencil::S16).map_err(err)?;
    let gauge = build_graph(&m.with_omega(m.omega().add(&OneFormField::exact(&shift))), 12, Stencil::S16).map_err(err)?;
    let d = pre_distance(&g, Sources::All).map_err(err)?;
    let dg = pre_distance(&gauge, Sources::All).map_err(err)?;
    let SymmetrizedDistance::Matrix(ds) = symmetrized(&d).map_err(err)? else {
        return Err("randers torus is vicious".into());
    };
    let v = g.node_count();
    let get = |d: &PreDistanceResult, i: usize, j: usize| d.get(i, j).expect("all rows");

    let cases = 10_000;
    let mut bad = 0;
    for _ in 0..cases {
        let (a, b, e) = (rng.gen_range(0..v), rng.gen_range(0..v), rng.gen_range(0..v));
        if get(&d, a, e) > get(&d, a, b) + get(&d, b, e) + 1e-12 {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("triangle inequality {bad}/{cases}"));
    total += cases;

    let mut bad = 0;
    for _ in 0..cases {
        let (a, b) = (rng.gen_range(0..v), rng.gen_range(0..v));
        if (ds[a][b] - ds[b][a]).abs() > 1e-12 {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("d_s symmetry {bad}/{cases}"));
    total += cases;

    // Edge quadrature integrates df only to within the graph's error bound.
    let quad_tol = g.grid().n() as f64 * 2.0 * (g.quad_bound() + gauge.quad_bound());
    let mut bad = 0;
    for _ in 0..cases {
        let (a, b) = (rng.gen_range(0..v), rng.gen_range(0..v));
        let (pa, pb) = (g.grid().point(a), g.grid().point(b));
        let want = get(&d, a, b) + shift.value(&pb) - shift.value(&pa);
        if (get(&dg, a, b) - want).abs() > 1e-12 + quad_tol {
            bad += 1;
        }
    }

    let orbits = 64;
    for _ in 0..orbits {
        let b = rng.gen_range(-2.0..2.0);
        let s = MagneticStructure::new(
            ChartManifold::plane((-50.0, 50.0), (-50.0, 50.0)).map_err(err)?,
            SymTensorField::euclidean(),
            ScalarField::constant(b),
            Some(OneFormField::new(ScalarField::zero(), ScalarField::coordinate(0).scale(-b))),
        )
        .map_err(err)?;
        let gauged = s.with_potential(s.potential().add(&OneFormField::exact(&shift))).map_err(err)?;
        let e = EnergyLevel::new(rng.gen_range(0.1..2.0)).map_err(err)?;
        let heading = rng.gen_range(0.0..TAU);
        let x0 = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a = fc_route_deviation(&s, e, x0, heading, PI, 1024).map_err(err)?;
        let ga = fc_route_deviation(&gauged, e, x0, heading, PI, 1024).map_err(err)?;
        if a > 1e-5 || ga > 1e-5 {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("gauge invariance {bad}/{} (graph tolerance {quad_tol:.1e})", cases + orbits));
    total += cases + orbits;

    let mut bad = 0;
    for _ in 0..orbits {
        let b = rng.gen_range(-3.0..3.0);
        let g = SymTensorField::constant(rng.gen_range(0.5..2.0), rng.gen_range(-0.2..0.2), rng.gen_range(0.5..2.0));
        let s = MagneticStructure::new(ChartManifold::unit_torus(), g, ScalarField::parse(&format!("{b}*sin(2*pi*x)"), &Default::default()).map_err(err)?, None)
            .map_err(err)?;
        let (x0, v0) = (random_point(&mut rng, s.chart()), random_vector(&mut rng));
        let e0 = s.energy(&x0, &v0);
        let orbit = integrate_magnetic(&s, x0, v0, 2.0, 2048).map_err(err)?;
        let drift = orbit.curve.samples().iter().map(|sm| (s.energy(&sm.point, &sm.velocity) - e0).abs()).fold(0.0, f64::max);
        if drift > 1e-8 * e0.max(1.0) {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("energy conservation {bad}/{orbits}"));
    total += orbits;

    let ladders = 24;
    let mut bad = 0;
    for _ in 0..ladders {
        let (r, phi) = (rng.gen_range(0.0..1.6), rng.gen_range(0.0..TAU));
        let m = PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), OneFormField::constant(r * phi.cos(), r * phi.sin()))
            .map_err(err)?;
        let g = build_graph(&m, 10, Stencil::S8).map_err(err)?;
        let d = pre_distance(&g, Sources::Nodes(vec![])).map_err(err)?;
        let opts = LadderOptions { convexity_budget: 2, periodic_refine: false, ..Default::default() };
        if !classify_ladder(&d, &g, &m, &opts).is_monotone() {
            bad += 1;
        }
    }
    c.check(bad == 0, format!("ladder monotonicity {bad}/{ladders}"));
    total += ladders;

    c.check(total >= PROPERTY_CASES, format!("{total} cases"));
    Ok(())
}
