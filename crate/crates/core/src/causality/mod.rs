//! Causal character of tangent vectors, the chronology relation, and the
//! causal ladder read off from pre-distance data.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::{
    ball, distances_from, scan_nodes, BallKind, DiscreteGeometry, PreDistanceResult,
};
use crate::exec::map_indexed;
use crate::fields::{Point, Vector, Winding, DIM};
use crate::geodesic::{periodic_search, shoot_connect, PeriodicOptions, ShootingOptions};
use crate::metrics::{PreRandersMetric, SOMSpacetime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Point,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: Point) -> Self {
        Self { t, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentClass {
    TimelikeFuture,
    TimelikePast,
    LightlikeFuture,
    LightlikePast,
    Spacelike,
    Zero,
}

/// Fermat value `ω(v)/β + √(ω(v)²/β² + g₀(v,v)/β)` at a point.
fn fermat_value(m: &SOMSpacetime, x: &Point, v: &Vector) -> (f64, f64) {
    let q = m.chart.wrap(x);
    let b = m.beta.value(&q);
    let w = m.omega.apply(&q, v) / b;
    let g0 = m.g0.quad(&q, v) / b;
    let root = (w * w + g0).max(0.0).sqrt();
    (w + root, root)
}

/// Classifies `(τ, v)` at `x` by comparing `τ` with `F(v)` and `−τ` with
/// `F(−v)`; `tol` is relative to `√h(v,v)`.
pub fn classify_tangent(m: &SOMSpacetime, x: &Point, tau: f64, v: &Vector, tol: f64) -> TangentClass {
    if tau == 0.0 && v.iter().all(|c| *c == 0.0) {
        return TangentClass::Zero;
    }
    let (f_plus, hn) = fermat_value(m, x, v);
    let (f_minus, _) = fermat_value(m, x, &-v);
    let band = tol * hn;
    if (tau - f_plus).abs() <= band {
        TangentClass::LightlikeFuture
    } else if (-tau - f_minus).abs() <= band {
        TangentClass::LightlikePast
    } else if tau > f_plus {
        TangentClass::TimelikeFuture
    } else if -tau > f_minus {
        TangentClass::TimelikePast
    } else {
        TangentClass::Spacelike
    }
}

/// The same classification from the sign of `g((τ,v),(τ,v))` and of `τ − ω(v)/β`.
pub fn classify_by_metric(m: &SOMSpacetime, x: &Point, tau: f64, v: &Vector, tol: f64) -> TangentClass {
    if tau == 0.0 && v.iter().all(|c| *c == 0.0) {
        return TangentClass::Zero;
    }
    let q = m.chart.wrap(x);
    let b = m.beta.value(&q);
    let g = m.g(x, tau, v);
    let (_, hn) = fermat_value(m, x, v);
    let future = tau - m.omega.apply(&q, v) / b > 0.0;
    // g = −β (τ − F(v)) (τ + F(−v)); scale the band accordingly
    let scale = b * (tau.abs() + hn) * hn;
    if g.abs() <= tol * scale {
        if future {
            TangentClass::LightlikeFuture
        } else {
            TangentClass::LightlikePast
        }
    } else if g < 0.0 {
        if future {
            TangentClass::TimelikeFuture
        } else {
            TangentClass::TimelikePast
        }
    } else {
        TangentClass::Spacelike
    }
}

/// Answer to `p₀ ≪ p₁`, computed as `d_F(x₀, x₁) < t₁ − t₀` on grid nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chronology {
    pub related: bool,
    pub d_f: f64,
    /// `|d_F − Δt| ≤ ε_zero`: the answer sits inside the discretization band.
    pub guard_band: bool,
}

pub fn chronological_related(
    d: &PreDistanceResult,
    g: &DiscreteGeometry,
    p0: &SpacetimePoint,
    p1: &SpacetimePoint,
) -> Chronology {
    let f = match d {
        PreDistanceResult::NegInfinity(_) => {
            return Chronology { related: true, d_f: f64::NEG_INFINITY, guard_band: false };
        }
        PreDistanceResult::Finite(f) => f,
    };
    let (i, j) = (g.grid().nearest(&p0.x), g.grid().nearest(&p1.x));
    let d_f = f.get(i, j).unwrap_or_else(|| distances_from(g, f.potential(), i)[j]);
    let dt = p1.t - p0.t;
    Chronology { related: d_f < dt, d_f, guard_band: (d_f - dt).abs() <= g.eps_zero() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSign {
    Future,
    Past,
}

/// `I^±(p)` sampled over grid nodes: the time threshold per node, whose
/// strict epigraph (future) or hypograph (past) is the set.
#[derive(Debug, Clone, PartialEq)]
pub struct ChronologicalSet {
    pub sign: TimeSign,
    pub threshold: Vec<f64>,
    pub window: (f64, f64),
    pub vicious: bool,
}

impl ChronologicalSet {
    pub fn contains(&self, node: usize, t: f64) -> bool {
        if t < self.window.0 || t > self.window.1 {
            return false;
        }
        if self.vicious {
            return true;
        }
        match self.sign {
            TimeSign::Future => t > self.threshold[node],
            TimeSign::Past => t < self.threshold[node],
        }
    }
}

pub fn chronological_set(
    d: &PreDistanceResult,
    g: &DiscreteGeometry,
    p: &SpacetimePoint,
    sign: TimeSign,
    window: (f64, f64),
) -> ChronologicalSet {
    let v = g.node_count();
    let f = match d {
        PreDistanceResult::NegInfinity(_) => {
            let fill = match sign {
                TimeSign::Future => f64::NEG_INFINITY,
                TimeSign::Past => f64::INFINITY,
            };
            return ChronologicalSet { sign, threshold: vec![fill; v], window, vicious: true };
        }
        PreDistanceResult::Finite(f) => f,
    };
    let x0 = g.grid().nearest(&p.x);
    let threshold = match sign {
        TimeSign::Future => {
            let row = f.row(x0).map(<[f64]>::to_vec).unwrap_or_else(|| distances_from(g, f.potential(), x0));
            row.iter().map(|r| p.t + r).collect()
        }
        TimeSign::Past => {
            let col = crate::distance::distances_to(g, f.potential(), x0);
            col.iter().map(|c| p.t - c).collect()
        }
    };
    ChronologicalSet { sign, threshold, window, vicious: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Fails,
    Marginal,
    Holds,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Marginal => "MARGINAL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub name: &'static str,
    pub verdict: Verdict,
    /// The quantity the verdict was read from, when there is one.
    pub value: Option<f64>,
    pub witness: String,
}

impl Rung {
    fn new(name: &'static str, verdict: Verdict, value: Option<f64>, witness: impl Into<String>) -> Self {
        Self { name, verdict, value, witness: witness.into() }
    }
}

/// Zero-band verdict: `≤ ε` fails, `(ε, 2ε]` is marginal.
fn banded(value: f64, eps: f64) -> Verdict {
    if value <= eps {
        Verdict::Fails
    } else if value <= 2.0 * eps {
        Verdict::Marginal
    } else {
        Verdict::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOptions {
    /// Random node pairs for the convexity audit.
    pub convexity_budget: usize,
    pub seed: u64,
    /// Refine the causal rung with continuum loops in classes `|w_i| ≤ 1`.
    pub periodic_refine: bool,
    /// Balls audited for global hyperbolicity on bounded charts.
    pub ball_audits: usize,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self { convexity_budget: 8, seed: 0x5eed, periodic_refine: true, ball_audits: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub totally_vicious: Rung,
    pub chronological: Rung,
    pub causal: Rung,
    pub distinguishing: Rung,
    pub causally_continuous: Rung,
    pub strongly_causal: Rung,
    pub stably_causal: Rung,
    pub causally_simple: Rung,
    pub globally_hyperbolic: Rung,
    pub eps_zero: f64,
    /// Winding of the shortest closed path found for the causal rung.
    pub cycle_winding: Option<Winding>,
    /// Pair attaining the smallest off-diagonal `d_s`.
    pub closest_pair: Option<(usize, usize)>,
    pub max_abs_df: Option<f64>,
}

impl LadderReport {
    /// Rungs from the bottom of the ladder up.
    pub fn rungs(&self) -> [&Rung; 9] {
        [
            &self.totally_vicious,
            &self.chronological,
            &self.causal,
            &self.stably_causal,
            &self.strongly_causal,
            &self.distinguishing,
            &self.causally_continuous,
            &self.causally_simple,
            &self.globally_hyperbolic,
        ]
    }

    /// Whether no rung holds while a rung below it fails.
    pub fn is_monotone(&self) -> bool {
        let chain = [
            &self.chronological,
            &self.causal,
            &self.distinguishing,
            &self.causally_simple,
            &self.globally_hyperbolic,
        ];
        chain.windows(2).all(|w| !(w[1].verdict == Verdict::Holds && w[0].verdict == Verdict::Fails))
    }
}

impl fmt::Display for LadderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.rungs() {
            write!(f, "{:<20} {:<8}", r.name, r.verdict.to_string())?;
            if let Some(v) = r.value {
                write!(f, " value={v:.6e}")?;
            }
            writeln!(f, " {}", r.witness)?;
        }
        Ok(())
    }
}

fn vicious_report(d_weight: f64, winding: Winding, eps: f64) -> LadderReport {
    let fail = |name| Rung::new(name, Verdict::Fails, None, "totally vicious");
    LadderReport {
        totally_vicious: Rung::new(
            "totally_vicious",
            Verdict::Holds,
            Some(d_weight),
            format!("negative cycle with winding {winding:?}"),
        ),
        chronological: fail("chronological"),
        causal: fail("causal"),
        distinguishing: fail("distinguishing"),
        causally_continuous: fail("causally_continuous"),
        strongly_causal: fail("strongly_causal"),
        stably_causal: fail("stably_causal"),
        causally_simple: fail("causally_simple"),
        globally_hyperbolic: fail("globally_hyperbolic"),
        eps_zero: eps,
        cycle_winding: Some(winding),
        closest_pair: None,
        max_abs_df: None,
    }
}

fn nonzero_classes(metric: &PreRandersMetric) -> Vec<Winding> {
    let chart = metric.chart();
    let range = |a: usize| if chart.is_periodic(a) { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for a in range(0) {
        for b in range(1) {
            if a != 0 || b != 0 {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Classifies every rung. Lower rungs that fail force the rungs above them
/// to fail.
pub fn classify_ladder(
    d: &PreDistanceResult,
    g: &DiscreteGeometry,
    metric: &PreRandersMetric,
    opts: &LadderOptions,
) -> LadderReport {
    let eps = g.eps_zero();
    let f = match d {
        PreDistanceResult::NegInfinity(c) => return vicious_report(c.weight, c.winding, eps),
        PreDistanceResult::Finite(f) => f,
    };
    let pot = f.potential();
    let scan = scan_nodes(g, pot);

    let chronological = Rung::new(
        "chronological",
        if scan.min_cycle >= -eps { Verdict::Holds } else { Verdict::Fails },
        Some(scan.min_cycle),
        "no negative cycle; value is the shortest closed path",
    );

    let mut cycle = scan.min_cycle;
    let mut winding = scan.min_cycle_winding;
    let mut source = format!("graph cycle of {} edges, winding {:?}", scan.min_cycle_edges.len(), winding);
    if opts.periodic_refine && metric.chart().has_periodic_axis() {
        let classes = nonzero_classes(metric);
        let popts = PeriodicOptions { vertices: 48, max_iterations: 1500, ..Default::default() };
        let loops = map_indexed(classes.len(), |k| periodic_search(metric, classes[k], &popts).ok());
        for l in loops.into_iter().flatten() {
            if l.length_f < cycle {
                cycle = l.length_f;
                winding = l.winding;
                source = format!("continuum loop in class {:?}", l.winding);
            }
        }
    }
    let causal = Rung::new("causal", banded(cycle, eps), Some(cycle), format!("shortest closed curve: {source}"));

    let (a, b) = scan.pair;
    let dist_verdict = banded(scan.min_offdiag_ds, eps);
    let distinguishing = Rung::new(
        "distinguishing",
        dist_verdict,
        Some(scan.min_offdiag_ds),
        format!("min off-diagonal d_s at nodes ({a}, {b})"),
    );
    let implied = |name| Rung::new(name, dist_verdict, Some(scan.min_offdiag_ds), "implied by d_s being a distance");

    let causally_simple = if dist_verdict == Verdict::Fails {
        Rung::new("causally_simple", Verdict::Fails, None, "not distinguishing")
    } else {
        convexity_audit(f.potential(), g, metric, opts)
    };

    let globally_hyperbolic = if dist_verdict != Verdict::Holds {
        Rung::new("globally_hyperbolic", dist_verdict.min(Verdict::Marginal), None, "distinguishing does not hold")
    } else if metric.chart().is_fully_periodic() {
        Rung::new("globally_hyperbolic", Verdict::Holds, None, "compact slice, d_s a distance")
    } else {
        ball_audit(d, g, opts)
    };

    let mut report = LadderReport {
        totally_vicious: Rung::new("totally_vicious", Verdict::Fails, None, "pre-distance finite"),
        chronological,
        causal,
        distinguishing,
        causally_continuous: implied("causally_continuous"),
        strongly_causal: implied("strongly_causal"),
        stably_causal: implied("stably_causal"),
        causally_simple,
        globally_hyperbolic,
        eps_zero: eps,
        cycle_winding: Some(winding),
        closest_pair: Some(scan.pair),
        max_abs_df: Some(scan.max_abs_df),
    };
    enforce_monotone(&mut report);
    report
}

fn enforce_monotone(r: &mut LadderReport) {
    let mut failed = r.chronological.verdict == Verdict::Fails;
    for rung in [
        &mut r.causal,
        &mut r.stably_causal,
        &mut r.strongly_causal,
        &mut r.distinguishing,
        &mut r.causally_continuous,
        &mut r.causally_simple,
        &mut r.globally_hyperbolic,
    ] {
        if failed && rung.verdict != Verdict::Fails {
            rung.verdict = Verdict::Fails;
            rung.witness = format!("{} (a lower rung fails)", rung.witness);
        }
        failed |= rung.verdict == Verdict::Fails;
    }
}

/// Shooting must reach the graph distance for sampled pairs. A miss is not
/// a certified non-attained pair, so the audit never fails.
fn convexity_audit(pot: &[f64], g: &DiscreteGeometry, metric: &PreRandersMetric, opts: &LadderOptions) -> Rung {
    if opts.convexity_budget == 0 {
        return Rung::new("causally_simple", Verdict::Marginal, None, "convexity not audited");
    }
    let v = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pairs: Vec<(usize, usize)> = (0..opts.convexity_budget)
        .map(|_| {
            let a = rng.gen_range(0..v);
            let mut b = rng.gen_range(0..v);
            while b == a {
                b = rng.gen_range(0..v);
            }
            (a, b)
        })
        .collect();
    let shoot = ShootingOptions { w_max: 1, ..Default::default() };
    let outcomes = map_indexed(pairs.len(), |k| {
        let (a, b) = pairs[k];
        let (pa, pb) = (g.grid().point(a), g.grid().point(b));
        let d_f = distances_from(g, pot, a)[b];
        match shoot_connect(metric, &pa, &pb, &shoot) {
            Ok(r) => {
                let len_h: f64 = r.span;
                (r.length_f <= d_f + 2.0 * g.grid_tolerance(len_h), r.length_f - d_f)
            }
            Err(_) => (false, f64::NAN),
        }
    });
    let attained = outcomes.iter().filter(|o| o.0).count();
    let worst = outcomes.iter().map(|o| o.1).filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if attained == pairs.len() { Verdict::Holds } else { Verdict::Marginal };
    Rung::new(
        "causally_simple",
        verdict,
        Some(worst),
        format!("{attained}/{} sampled pairs joined by a connector within tolerance of d_F", pairs.len()),
    )
}

/// On a bounded chart, symmetrized balls around interior nodes must stay off
/// the truncation boundary.
fn ball_audit(d: &PreDistanceResult, g: &DiscreteGeometry, opts: &LadderOptions) -> Rung {
    let grid = g.grid();
    let n = grid.n();
    let chart = grid.chart();
    let center = grid.nearest(&chart.center());
    let mut centers = vec![center];
    let q = n / 4;
    for (i, j) in [(n / 2 - q / 2, n / 2), (n / 2 + q / 2, n / 2), (n / 2, n / 2 - q / 2), (n / 2, n / 2 + q / 2)] {
        centers.push(grid.index(i, j));
    }
    centers.truncate(opts.ball_audits.max(1));
    let mut touching = 0;
    for &c in &centers {
        let margin = (0..DIM)
            .filter(|&a| !chart.is_periodic(a))
            .map(|a| {
                let (i, j) = grid.coords(c);
                let k = if a == 0 { i } else { j };
                k.min(n - 1 - k) as f64 * grid.step()[a]
            })
            .fold(f64::INFINITY, f64::min);
        let r = 0.5 * margin;
        let b = ball(g, d, c, r, BallKind::Symmetrized);
        if b.nodes.iter().any(|&y| grid.on_boundary(y)) {
            touching += 1;
        }
    }
    let verdict = if touching == 0 { Verdict::Holds } else { Verdict::Marginal };
    Rung::new(
        "globally_hyperbolic",
        verdict,
        None,
        format!("{} of {} audited symmetrized balls reach the chart boundary (truncated chart)", touching, centers.len()),
    )
}

#[cfg(test)]
mod tests;
