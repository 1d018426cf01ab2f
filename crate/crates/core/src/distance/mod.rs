//! Grid discretization of a pre-Randers metric as a directed graph, the
//! pre-distance with global `−∞` detection, and symmetrized distances.
//!
//! Negative edges are handled by a node potential from one Bellman–Ford
//! pass; every later search runs Dijkstra on reduced weights.

mod cycles;
mod graph;
mod grid;
mod shortest;

pub use cycles::{has_cycle_below, min_cycle_ratio, RatioCycle};
pub use graph::{build_graph, DiscreteGeometry, Edge};
pub use grid::{Grid, Stencil};

use thiserror::Error;

use crate::exec::map_indexed;
use crate::fields::{winding_add, Curve, CurveSample, Winding};
use crate::metrics::MetricError;
use shortest::{backward_path, dijkstra, dijkstra_to_set, dijkstra_with, forward_path, relax, Relaxation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("grid needs N >= 8, got {n}")]
    GridTooSmall { n: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("edge {from} -> {to} has a non-finite weight")]
    NonFiniteWeight { from: usize, to: usize },
    #[error("relaxation did not settle within {rounds} rounds")]
    NoConvergence { rounds: usize },
    #[error("node {0} is outside the grid")]
    NodeOutOfRange(usize),
    #[error("the symmetrized matrix needs rows for all sources")]
    IncompleteMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceStatus {
    Finite,
    NegInfinity,
}

/// A closed edge path with negative `F`-length.
#[derive(Debug, Clone)]
pub struct NegativeCycle {
    pub edges: Vec<usize>,
    pub weight: f64,
    pub h_length: f64,
    pub winding: Winding,
    pub curve: Curve,
}

/// Which rows to materialize.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sources {
    All,
    Nodes(Vec<usize>),
}

/// Potential and the requested rows `d_F(s, ·)`.
#[derive(Debug, Clone)]
pub struct FiniteDistance {
    potential: Vec<f64>,
    sources: Vec<usize>,
    rows: Vec<Vec<f64>>,
    row_of: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub enum PreDistanceResult {
    Finite(FiniteDistance),
    NegInfinity(NegativeCycle),
}

impl PreDistanceResult {
    pub fn status(&self) -> DistanceStatus {
        match self {
            PreDistanceResult::Finite(_) => DistanceStatus::Finite,
            PreDistanceResult::NegInfinity(_) => DistanceStatus::NegInfinity,
        }
    }

    pub fn finite(&self) -> Option<&FiniteDistance> {
        match self {
            PreDistanceResult::Finite(f) => Some(f),
            PreDistanceResult::NegInfinity(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&NegativeCycle> {
        match self {
            PreDistanceResult::NegInfinity(c) => Some(c),
            PreDistanceResult::Finite(_) => None,
        }
    }

    /// `d_F(i, j)`: `−∞` when vicious, `None` when row `i` was not requested.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        match self {
            PreDistanceResult::Finite(f) => f.get(i, j),
            PreDistanceResult::NegInfinity(_) => Some(f64::NEG_INFINITY),
        }
    }
}

impl FiniteDistance {
    /// Node labels with `π(v) ≤ π(u) + w(u→v)` on every edge.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.row_of.get(i).copied().flatten().map(|r| self.rows[r].as_slice())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.row(i).map(|r| r[j])
    }

    pub fn has_all_rows(&self) -> bool {
        self.row_of.iter().all(Option::is_some)
    }
}

fn witness_curve(g: &DiscreteGeometry, edges: &[usize]) -> (Curve, Winding) {
    let grid = g.grid();
    let mut p = grid.point(g.edge(edges[0]).from as usize);
    let mut winding = [0, 0];
    let mut samples = Vec::with_capacity(edges.len() + 1);
    for (k, &ei) in edges.iter().enumerate() {
        let e = g.edge(ei);
        let d = grid.displacement(e.offset);
        samples.push(CurveSample { t: k as f64, point: p, velocity: d });
        p += d;
        winding = winding_add(winding, e.winding);
    }
    let last = grid.displacement(g.edge(edges[edges.len() - 1]).offset);
    samples.push(CurveSample { t: edges.len() as f64, point: p, velocity: last });
    let curve = Curve::new(samples, winding, true).expect("cycle has at least one edge");
    (curve, winding)
}

/// Closed edge path packaged with its `F`- and `h`-lengths.
pub fn cycle_of(g: &DiscreteGeometry, edges: Vec<usize>) -> NegativeCycle {
    let weight = edges.iter().map(|&k| g.edge(k).weight).sum();
    let h_length = edges.iter().map(|&k| g.edge(k).h_len).sum();
    let (curve, winding) = witness_curve(g, &edges);
    NegativeCycle { edges, weight, h_length, winding, curve }
}

/// The potential, or a negative cycle. The reported cycle minimizes
/// `F`-length per unit `h`-length, which is the most vicious loop.
pub fn node_potential(g: &DiscreteGeometry) -> Result<Result<Vec<f64>, NegativeCycle>, DistanceError> {
    let v = g.node_count();
    if g.min_weight() >= 0.0 {
        return Ok(Ok(vec![0.0; v]));
    }
    match relax(g, |e| e.weight, 2 * v + 2)? {
        Relaxation::Potential(p) => Ok(Ok(p)),
        Relaxation::Cycle(found) => {
            let refined = min_cycle_ratio(g, |e| e.weight, |e| e.h_len)
                .filter(|r| r.num < 0.0)
                .map(|r| r.edges)
                .unwrap_or(found);
            Ok(Err(cycle_of(g, refined)))
        }
    }
}

/// `d_F(s, ·)`.
pub fn distances_from(g: &DiscreteGeometry, potential: &[f64], s: usize) -> Vec<f64> {
    dijkstra(g, potential, s, false).0
}

/// `d_F(·, t)`.
pub fn distances_to(g: &DiscreteGeometry, potential: &[f64], t: usize) -> Vec<f64> {
    dijkstra(g, potential, t, true).0
}

/// `min_{c ∈ targets} d_F(·, c)` in one backward search.
pub fn distances_to_set(g: &DiscreteGeometry, potential: &[f64], targets: &[usize]) -> Vec<f64> {
    dijkstra_to_set(g, potential, targets)
}

/// `d(s, ·)` for nonnegative edge weights `weight`.
pub fn distances_from_with<W: Fn(&Edge) -> f64>(g: &DiscreteGeometry, s: usize, weight: W) -> Vec<f64> {
    dijkstra_with(g, &vec![0.0; g.node_count()], s, false, weight).0
}

/// Whether the weights admit a cycle of negative total, by Bellman–Ford.
pub fn has_negative_cycle<W: Fn(&Edge) -> f64 + Sync>(g: &DiscreteGeometry, weight: W) -> Result<bool, DistanceError> {
    let v = g.node_count();
    Ok(matches!(relax(g, weight, 2 * v + 2)?, Relaxation::Cycle(_)))
}

/// Edges of a shortest path `s → t`.
pub fn shortest_path(g: &DiscreteGeometry, potential: &[f64], s: usize, t: usize) -> Option<Vec<usize>> {
    let (d, tree) = dijkstra(g, potential, s, false);
    d[t].is_finite().then(|| forward_path(g, &tree, s, t))
}

/// `d_s(i, ·) = ½(d_F(i, ·) + d_F(·, i))`.
pub fn symmetrized_row(g: &DiscreteGeometry, potential: &[f64], i: usize) -> Vec<f64> {
    let from = distances_from(g, potential, i);
    let to = distances_to(g, potential, i);
    from.iter().zip(&to).map(|(a, b)| 0.5 * (a + b)).collect()
}

pub fn pre_distance(g: &DiscreteGeometry, sources: Sources) -> Result<PreDistanceResult, DistanceError> {
    let v = g.node_count();
    let sources = match sources {
        Sources::All => (0..v).collect(),
        Sources::Nodes(list) => {
            if let Some(&bad) = list.iter().find(|&&s| s >= v) {
                return Err(DistanceError::NodeOutOfRange(bad));
            }
            list
        }
    };
    let potential = match node_potential(g)? {
        Ok(p) => p,
        Err(cycle) => return Ok(PreDistanceResult::NegInfinity(cycle)),
    };
    let rows = map_indexed(sources.len(), |k| distances_from(g, &potential, sources[k]));
    let mut row_of = vec![None; v];
    for (k, &s) in sources.iter().enumerate() {
        row_of[s].get_or_insert(k);
    }
    Ok(PreDistanceResult::Finite(FiniteDistance { potential, sources, rows, row_of }))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymmetrizedDistance {
    Matrix(Vec<Vec<f64>>),
    NegInfinity,
}

pub fn symmetrized(d: &PreDistanceResult) -> Result<SymmetrizedDistance, DistanceError> {
    let f = match d {
        PreDistanceResult::NegInfinity(_) => return Ok(SymmetrizedDistance::NegInfinity),
        PreDistanceResult::Finite(f) => f,
    };
    if !f.has_all_rows() {
        return Err(DistanceError::IncompleteMatrix);
    }
    let v = f.row_of.len();
    let m = map_indexed(v, |i| {
        let ri = f.row(i).expect("row present");
        (0..v).map(|j| 0.5 * (ri[j] + f.get(j, i).expect("row present"))).collect()
    });
    Ok(SymmetrizedDistance::Matrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallKind {
    Forward,
    Backward,
    Symmetrized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub nodes: Vec<usize>,
    /// Set when the pre-distance is `−∞`; `nodes` is then every node.
    pub vicious: bool,
}

/// `{y : d(x, y) < r}` for the chosen kind of distance.
pub fn ball(g: &DiscreteGeometry, d: &PreDistanceResult, x: usize, r: f64, kind: BallKind) -> Ball {
    let f = match d {
        PreDistanceResult::NegInfinity(_) => {
            return Ball { nodes: (0..g.node_count()).collect(), vicious: true };
        }
        PreDistanceResult::Finite(f) => f,
    };
    let pot = f.potential();
    let values = match kind {
        BallKind::Forward => f.row(x).map(<[f64]>::to_vec).unwrap_or_else(|| distances_from(g, pot, x)),
        BallKind::Backward => distances_to(g, pot, x),
        BallKind::Symmetrized => symmetrized_row(g, pot, x),
    };
    Ball { nodes: (0..values.len()).filter(|&y| values[y] < r).collect(), vicious: false }
}

/// Whole-graph summary from one forward and one backward search per node.
#[derive(Debug, Clone)]
pub struct NodeScan {
    /// Minimum `F`-length over closed edge paths, with a witness.
    pub min_cycle: f64,
    pub min_cycle_edges: Vec<usize>,
    pub min_cycle_winding: Winding,
    /// Minimum of `d_s(i, j)` over `i ≠ j`, attained at `pair`.
    pub min_offdiag_ds: f64,
    pub pair: (usize, usize),
    pub max_abs_df: f64,
    pub max_df: f64,
}

pub fn scan_nodes(g: &DiscreteGeometry, potential: &[f64]) -> NodeScan {
    struct Local {
        cycle: f64,
        edge: usize,
        ds: f64,
        partner: usize,
        max_abs: f64,
        max: f64,
    }
    let v = g.node_count();
    let locals = map_indexed(v, |u| {
        let from = distances_from(g, potential, u);
        let to = distances_to(g, potential, u);
        let (mut cycle, mut edge) = (f64::INFINITY, usize::MAX);
        for ei in g.out_range(u) {
            let e = g.edge(ei);
            let c = e.weight + to[e.to as usize];
            if c < cycle {
                cycle = c;
                edge = ei;
            }
        }
        let (mut ds, mut partner) = (f64::INFINITY, usize::MAX);
        for j in (0..v).filter(|&j| j != u) {
            let s = 0.5 * (from[j] + to[j]);
            if s < ds {
                ds = s;
                partner = j;
            }
        }
        let max_abs = from.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let max = from.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Local { cycle, edge, ds, partner, max_abs, max }
    });
    let bc = (0..v).min_by(|&a, &b| locals[a].cycle.total_cmp(&locals[b].cycle)).expect("nonempty grid");
    let bd = (0..v).min_by(|&a, &b| locals[a].ds.total_cmp(&locals[b].ds)).expect("nonempty grid");
    let first = locals[bc].edge;
    let (_, tree) = dijkstra(g, potential, bc, true);
    let mut edges = vec![first];
    edges.extend(backward_path(g, &tree, bc, g.edge(first).to as usize));
    let winding = edges.iter().fold([0, 0], |w, &k| winding_add(w, g.edge(k).winding));
    NodeScan {
        min_cycle: locals[bc].cycle,
        min_cycle_edges: edges,
        min_cycle_winding: winding,
        min_offdiag_ds: locals[bd].ds,
        pair: (bd, locals[bd].partner),
        max_abs_df: locals.iter().map(|l| l.max_abs).fold(0.0, f64::max),
        max_df: locals.iter().map(|l| l.max).fold(f64::NEG_INFINITY, f64::max),
    }
}
