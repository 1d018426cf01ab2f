//! Distance to a closed set, its minimizing segments and cut locus.
//!
//! `ρ_C(x)` is the infimum of `F`-lengths of curves from `x` to `C`, so it is
//! computed by one backward search seeded at every node of `C`. A node is a
//! cut point when two minimizing segments with distinct initial directions
//! leave it, or when `ρ_C` has a concave kink there; the two detectors are
//! reported separately and compared.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causality::{chronological_related, SpacetimePoint, Verdict};
use crate::distance::{distances_to_set, node_potential, pre_distance, DiscreteGeometry, DistanceError, Grid, Sources};
use crate::exec::map_indexed;
use crate::fields::{winding_add, Curve, CurveSample, Point, Vector, Winding};
use crate::geodesic::{shoot_connect_class, ShootingOptions, ShootingResult};
use crate::metrics::PreRandersMetric;

/// Angular gap separating distinct initial directions.
pub const ALPHA_SEP: f64 = PI / 6.0;
/// Concave slope jump of `ρ_C` that counts as non-smooth: three times a
/// smoothness band of 0.25.
pub const KINK_THRESHOLD: f64 = 0.75;
/// Relative round-off floor for `ε_multi`.
const EPS_MULTI_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HorizonError {
    #[error("target set is empty")]
    EmptyTarget,
    #[error("target point ({x}, {y}) lies outside the chart")]
    TargetOutside { x: f64, y: f64 },
    #[error("rho_C is identically -infinity: the distance admits a negative cycle")]
    NegInfinity,
    #[error("horizon graph is not achronal: chronological gap {gap:.3e} between nodes {from} and {to}")]
    NotAchronal { from: usize, to: usize, gap: f64 },
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// Analytic description of `C`, rasterized per grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Point { at: [f64; 2] },
    Points { at: Vec<[f64; 2]> },
    Circle { center: [f64; 2], radius: f64 },
}

impl TargetSpec {
    /// Nodes whose cells meet the set.
    pub fn rasterize(&self, grid: &Grid) -> Result<TargetSet, HorizonError> {
        let chart = grid.chart();
        let node_of = |p: &[f64; 2]| {
            let p = Point::new(p[0], p[1]);
            if !chart.contains(&chart.wrap(&p)) {
                return Err(HorizonError::TargetOutside { x: p[0], y: p[1] });
            }
            Ok(grid.nearest(&p))
        };
        let nodes = match self {
            TargetSpec::Point { at } => vec![node_of(at)?],
            TargetSpec::Points { at } => at.iter().map(node_of).collect::<Result<_, _>>()?,
            TargetSpec::Circle { center, radius } => {
                let c = Point::new(center[0], center[1]);
                let [sx, sy] = grid.step();
                let half_diag = 0.5 * sx.hypot(sy);
                (0..grid.len())
                    .filter(|&i| {
                        let r = chart.wrap_displacement(&c, &grid.point(i)).map(|(d, _)| d.norm()).unwrap_or(f64::INFINITY);
                        (r - radius).abs() <= half_diag
                    })
                    .collect()
            }
        };
        TargetSet::new(grid.len(), nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    nodes: Vec<usize>,
    member: Vec<bool>,
}

impl TargetSet {
    pub fn new(node_count: usize, mut nodes: Vec<usize>) -> Result<Self, HorizonError> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(HorizonError::EmptyTarget);
        }
        if let Some(&bad) = nodes.iter().find(|&&i| i >= node_count) {
            return Err(DistanceError::NodeOutOfRange(bad).into());
        }
        let mut member = vec![false; node_count];
        for &i in &nodes {
            member[i] = true;
        }
        Ok(Self { nodes, member })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn contains(&self, i: usize) -> bool {
        self.member[i]
    }
}

/// `ρ_C` per node; every entry is `−∞` when the distance collapses.
pub fn rho_c(g: &DiscreteGeometry, c: &TargetSet) -> Result<Vec<f64>, HorizonError> {
    match node_potential(g)? {
        Ok(pot) => Ok(distances_to_set(g, &pot, c.nodes())),
        Err(_) => Ok(vec![f64::NEG_INFINITY; g.node_count()]),
    }
}

fn require_finite(rho: &[f64]) -> Result<(), HorizonError> {
    if rho.iter().any(|r| *r == f64::NEG_INFINITY) {
        Err(HorizonError::NegInfinity)
    } else {
        Ok(())
    }
}

/// `ε_multi`: twice the edge quadrature bound, floored at round-off.
pub fn eps_multi(g: &DiscreteGeometry, rho: &[f64]) -> f64 {
    let scale = rho.iter().filter(|r| r.is_finite()).fold(1.0f64, |m, r| m.max(r.abs()));
    (2.0 * g.quad_bound()).max(EPS_MULTI_FLOOR * scale)
}

/// Out-edges of `p` lying on a minimizing path, with their slack
/// `w + ρ(q) − ρ(p) ≥ 0`.
fn tight_edges(g: &DiscreteGeometry, rho: &[f64], p: usize, eps: f64) -> Vec<(usize, f64)> {
    g.out_range(p)
        .filter_map(|k| {
            let e = g.edge(k);
            let slack = e.weight + rho[e.to as usize] - rho[p];
            (slack <= eps).then_some((k, slack.max(0.0)))
        })
        .collect()
}

fn heading(g: &DiscreteGeometry, k: usize) -> f64 {
    let d = g.grid().displacement(g.edge(k).offset);
    d[1].atan2(d[0])
}

/// Headings split at circular gaps wider than `ALPHA_SEP`; each cluster is
/// returned as a list of indices into `angles`.
fn cluster_headings(angles: &[f64]) -> Vec<Vec<usize>> {
    if angles.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..angles.len()).collect();
    order.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]));
    let gap_after = |k: usize| {
        let (a, b) = (angles[order[k]], angles[order[(k + 1) % order.len()]]);
        let d = b - a;
        if k + 1 == order.len() {
            d + 2.0 * PI
        } else {
            d
        }
    };
    let cuts: Vec<usize> = (0..order.len()).filter(|&k| gap_after(k) > ALPHA_SEP).collect();
    if cuts.len() <= 1 {
        return vec![order];
    }
    cuts.iter()
        .enumerate()
        .map(|(c, &end)| {
            let start = (cuts[(c + cuts.len() - 1) % cuts.len()] + 1) % order.len();
            let mut members = Vec::new();
            let mut k = start;
            loop {
                members.push(order[k]);
                if k == end {
                    break;
                }
                k = (k + 1) % order.len();
            }
            members
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub edges: Vec<usize>,
    pub nodes: Vec<usize>,
    pub curve: Curve,
    pub winding: Winding,
    pub length_f: f64,
    /// Largest `|ρ(a) − ℓ_F(a→b) − ρ(b)|` over node pairs along the segment.
    pub eq_residual: f64,
    /// The shooting connector in the same class, when it converged.
    pub polished: Option<ShootingResult>,
}

fn follow(g: &DiscreteGeometry, rho: &[f64], c: &TargetSet, p: usize, first: usize, eps: f64) -> Segment {
    let grid = g.grid();
    let dir = heading(g, first);
    let mut edges = vec![first];
    let mut nodes = vec![p, g.edge(first).to as usize];
    let mut at = *nodes.last().unwrap();
    while !c.contains(at) && edges.len() <= g.node_count() {
        let next = tight_edges(g, rho, at, eps)
            .into_iter()
            .filter(|&(k, _)| (heading(g, k) - dir).cos() >= ALPHA_SEP.cos())
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| (heading(g, b.0) - dir).cos().total_cmp(&(heading(g, a.0) - dir).cos())));
        let Some((k, _)) = next.or_else(|| tight_edges(g, rho, at, eps).into_iter().min_by(|a, b| a.1.total_cmp(&b.1))) else {
            break;
        };
        edges.push(k);
        at = g.edge(k).to as usize;
        nodes.push(at);
    }
    let mut prefix = vec![0.0];
    for &k in &edges {
        prefix.push(prefix.last().unwrap() + g.edge(k).weight);
    }
    let mut eq_residual = 0.0f64;
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            eq_residual = eq_residual.max((rho[nodes[a]] - (prefix[b] - prefix[a]) - rho[nodes[b]]).abs());
        }
    }
    let mut point = grid.point(p);
    let mut winding = [0; 2];
    let mut samples = Vec::with_capacity(edges.len() + 1);
    for (t, &k) in edges.iter().enumerate() {
        let d = grid.displacement(g.edge(k).offset);
        samples.push(CurveSample { t: t as f64, point, velocity: d });
        point += d;
        winding = winding_add(winding, g.edge(k).winding);
    }
    let last = samples.last().map_or(Vector::zeros(), |s| s.velocity);
    samples.push(CurveSample { t: edges.len() as f64, point, velocity: last });
    let curve = Curve::new(samples, winding, false).expect("segment has samples");
    Segment { length_f: prefix[edges.len()], edges, nodes, curve, winding, eq_residual, polished: None }
}

/// One discrete minimizing segment per cluster of initial directions,
/// followed through tight edges to `C` and polished by shooting.
pub fn minimizing_segments(
    g: &DiscreteGeometry,
    metric: &PreRandersMetric,
    rho: &[f64],
    c: &TargetSet,
    p: usize,
    opts: &ShootingOptions,
) -> Result<Vec<Segment>, HorizonError> {
    require_finite(rho)?;
    let grid = g.grid();
    if c.contains(p) {
        let curve = Curve::segment(grid.point(p), Vector::zeros(), 1);
        return Ok(vec![Segment { edges: vec![], nodes: vec![p], curve, winding: [0, 0], length_f: 0.0, eq_residual: 0.0, polished: None }]);
    }
    let eps = eps_multi(g, rho);
    let tight = tight_edges(g, rho, p, eps);
    let angles: Vec<f64> = tight.iter().map(|&(k, _)| heading(g, k)).collect();
    let segments = cluster_headings(&angles)
        .into_iter()
        .map(|members| {
            let (first, _) = members.iter().map(|&m| tight[m]).min_by(|a, b| a.1.total_cmp(&b.1)).expect("clusters are nonempty");
            let mut s = follow(g, rho, c, p, first, eps);
            let end = grid.point(*s.nodes.last().unwrap());
            s.polished = shoot_connect_class(metric, &grid.point(p), &end, s.winding, opts).ok();
            s
        })
        .collect();
    Ok(segments)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutReport {
    pub rho: Vec<f64>,
    /// Number of distinct initial directions of minimizing segments, from
    /// the node and, away from `C`, its lower neighbours.
    pub multiplicity: Vec<u32>,
    /// Nodes with a concave kink of `ρ_C`.
    pub kinks: Vec<usize>,
    /// `{N_C ≥ 2} ∪ kinks`, excluding inconclusive nodes.
    pub cut_nodes: Vec<usize>,
    /// Nodes whose minimizers run into the boundary of a bounded chart.
    pub inconclusive: Vec<usize>,
    /// `−ρ_C`.
    pub horizon: Vec<f64>,
    /// Share of flagged nodes with a node of the other detector within one cell.
    pub agreement: f64,
    pub agreement_verdict: Verdict,
    pub fraction: f64,
    pub eps_multi: f64,
}

impl CutReport {
    pub fn is_cut(&self, i: usize) -> bool {
        self.cut_nodes.binary_search(&i).is_ok()
    }
}

/// Largest concave slope jump of `ρ` at `p` over the axis and diagonal
/// directions, measured per unit `h`-length.
fn kink(g: &DiscreteGeometry, rho: &[f64], p: usize) -> f64 {
    [(1, 0), (0, 1), (1, 1), (1, -1)]
        .iter()
        .filter_map(|&(a, b)| {
            let fwd = g.edge_by_offset(p, (a, b))?;
            let back = g.edge_by_offset(p, (-a, -b))?;
            let (ef, eb) = (g.edge(fwd), g.edge(back));
            Some((rho[p] - rho[eb.to as usize]) / eb.h_len + (rho[p] - rho[ef.to as usize]) / ef.h_len)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

const RING: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Below this many cells from `C`, neighbouring headings differ by more than
/// `ALPHA_SEP` on a single sheet, so only a node's own headings count.
const NEAR_TARGET_CELLS: usize = 4;

/// Chebyshev cell distance to `C`.
fn cells_from(grid: &Grid, c: &TargetSet) -> Vec<usize> {
    let mut dist = vec![usize::MAX; grid.len()];
    let mut queue = std::collections::VecDeque::new();
    for &i in c.nodes() {
        dist[i] = 0;
        queue.push_back(i);
    }
    while let Some(p) = queue.pop_front() {
        for (q, _) in RING.iter().filter_map(|&o| grid.neighbor(p, o)) {
            if dist[q] == usize::MAX {
                dist[q] = dist[p] + 1;
                queue.push_back(q);
            }
        }
    }
    dist
}

fn within_one_cell(grid: &Grid, flagged: &[bool], p: usize) -> bool {
    flagged[p]
        || RING
            .iter()
            .filter_map(|&o| grid.neighbor(p, o))
            .any(|(q, _)| flagged[q])
}

pub fn cut_locus(g: &DiscreteGeometry, c: &TargetSet) -> Result<CutReport, HorizonError> {
    let rho = rho_c(g, c)?;
    require_finite(&rho)?;
    let grid = g.grid();
    let v = g.node_count();
    let eps = eps_multi(g, &rho);
    let near_c = cells_from(grid, c);
    let headings: Vec<Vec<f64>> =
        map_indexed(v, |p| tight_edges(g, &rho, p, eps).iter().map(|&(k, _)| heading(g, k)).collect());
    // A cut crossing between two nodes shows up as distinct headings at the
    // upper node and its lower neighbour.
    let multiplicity: Vec<u32> = map_indexed(v, |p| {
        if c.contains(p) {
            return 1;
        }
        let mut angles = headings[p].clone();
        if near_c[p] > NEAR_TARGET_CELLS {
            for (q, _) in RING.iter().filter_map(|&o| grid.neighbor(p, o)) {
                if rho[q] < rho[p] {
                    angles.extend_from_slice(&headings[q]);
                }
            }
        }
        cluster_headings(&angles).len() as u32
    });
    let is_kink: Vec<bool> = map_indexed(v, |p| !c.contains(p) && !grid.on_boundary(p) && kink(g, &rho, p) > KINK_THRESHOLD);

    // Minimizers from p run into the truncation boundary when some tight
    // edge leads to a node that does, starting from boundary nodes off C.
    let mut inconclusive: Vec<bool> = (0..v).map(|p| grid.on_boundary(p) && !c.contains(p)).collect();
    if inconclusive.iter().any(|&b| b) {
        loop {
            let next: Vec<bool> = map_indexed(v, |p| {
                inconclusive[p] || (!c.contains(p) && tight_edges(g, &rho, p, eps).iter().any(|&(k, _)| inconclusive[g.edge(k).to as usize]))
            });
            if next == inconclusive {
                break;
            }
            inconclusive = next;
        }
    }

    let multi: Vec<bool> = multiplicity.iter().map(|&m| m >= 2).collect();
    let cut_nodes: Vec<usize> = (0..v).filter(|&p| (multi[p] || is_kink[p]) && !inconclusive[p]).collect();
    let (agreeing, flagged) = cut_nodes.iter().fold((0usize, 0usize), |(a, n), &p| {
        let ok = if multi[p] { within_one_cell(grid, &is_kink, p) } else { within_one_cell(grid, &multi, p) };
        (a + ok as usize, n + 1)
    });
    let agreement = if flagged == 0 { 1.0 } else { agreeing as f64 / flagged as f64 };
    let agreement_verdict = if agreement >= 0.95 { Verdict::Holds } else { Verdict::Marginal };
    Ok(CutReport {
        horizon: rho.iter().map(|r| -r).collect(),
        fraction: cut_nodes.len() as f64 / v as f64,
        kinks: (0..v).filter(|&p| is_kink[p]).collect(),
        inconclusive: (0..v).filter(|&p| inconclusive[p]).collect(),
        rho,
        multiplicity,
        cut_nodes,
        agreement,
        agreement_verdict,
        eps_multi: eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub n: usize,
    pub cut_nodes: usize,
    pub fraction: f64,
    pub agreement: f64,
}

/// Cut fraction per grid size, for the measure-zero check.
pub fn refinement_table(
    metric: &PreRandersMetric,
    target: &TargetSpec,
    sizes: &[usize],
    stencil: crate::distance::Stencil,
) -> Result<Vec<RefinementRow>, HorizonError> {
    sizes
        .iter()
        .map(|&n| {
            let g = crate::distance::build_graph(metric, n, stencil)?;
            let c = target.rasterize(g.grid())?;
            let r = cut_locus(&g, &c)?;
            Ok(RefinementRow { n, cut_nodes: r.cut_nodes.len(), fraction: r.fraction, agreement: r.agreement })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonGraph {
    /// `−ρ_C` per node.
    pub time: Vec<f64>,
    pub audited_pairs: usize,
    /// Largest `t(y) − t(x) − d_F(x, y)` over audited pairs.
    pub worst_gap: f64,
}

/// `H = {(−ρ_C(x), x)}` with an achronality audit from `samples` seeded
/// base points against every node.
pub fn horizon_graph(g: &DiscreteGeometry, rho: &[f64], samples: usize, seed: u64) -> Result<HorizonGraph, HorizonError> {
    require_finite(rho)?;
    let v = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: Vec<usize> = (0..samples.min(v)).map(|_| rng.gen_range(0..v)).collect();
    let d = pre_distance(g, Sources::Nodes(bases.clone()))?;
    let grid = g.grid();
    let at = |i: usize| SpacetimePoint::new(-rho[i], grid.point(i));
    let mut worst = (f64::NEG_INFINITY, 0, 0);
    for &x in &bases {
        for y in 0..v {
            let ch = chronological_related(&d, g, &at(x), &at(y));
            let gap = (rho[x] - rho[y]) - ch.d_f;
            if gap > worst.0 {
                worst = (gap, x, y);
            }
        }
    }
    if worst.0 > g.eps_zero() {
        return Err(HorizonError::NotAchronal { from: worst.1, to: worst.2, gap: worst.0 });
    }
    Ok(HorizonGraph { time: rho.iter().map(|r| -r).collect(), audited_pairs: bases.len() * v, worst_gap: worst.0 })
}

#[cfg(test)]
mod tests;
