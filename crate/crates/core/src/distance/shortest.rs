use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::exec::map_indexed;

use super::graph::{DiscreteGeometry, Edge};
use super::DistanceError;

pub(crate) const NO_EDGE: u32 = u32::MAX;

/// Outcome of the potential pass.
pub(crate) enum Relaxation {
    /// Labels `π` with `π(v) ≤ π(u) + w(u→v)` on every edge.
    Potential(Vec<f64>),
    /// Edge indices of a cycle with negative total weight, in order.
    Cycle(Vec<usize>),
}

/// Jacobi Bellman–Ford from a virtual source joined to every node by a
/// zero edge. Updates pull over in-edges, so a round is parallel over nodes.
/// Improvements smaller than `1e-14·(max|w| + |label|)` are ignored; after
/// every round the predecessor graph is searched for a negative cycle.
pub(crate) fn relax<W>(g: &DiscreteGeometry, weight: W, max_rounds: usize) -> Result<Relaxation, DistanceError>
where
    W: Fn(&Edge) -> f64 + Sync,
{
    let v = g.node_count();
    let scale = g.edges().iter().map(|e| weight(e).abs()).fold(0.0, f64::max);
    let mut dist = vec![0.0f64; v];
    let mut pred = vec![NO_EDGE; v];
    for _ in 0..max_rounds {
        let updates = map_indexed(v, |t| {
            let mut best = dist[t];
            let mut via = None;
            for &ei in g.in_edges(t) {
                let e = g.edge(ei as usize);
                let cand = dist[e.from as usize] + weight(e);
                if cand < best - 1e-14 * (scale + best.abs()) {
                    best = cand;
                    via = Some(ei);
                }
            }
            via.map(|ei| (best, ei))
        });
        let mut changed = false;
        for (t, u) in updates.into_iter().enumerate() {
            if let Some((d, ei)) = u {
                dist[t] = d;
                pred[t] = ei;
                changed = true;
            }
        }
        if !changed {
            return Ok(Relaxation::Potential(dist));
        }
        if let Some(cycle) = predecessor_cycle(g, &pred) {
            if cycle.iter().map(|&k| weight(g.edge(k))).sum::<f64>() < 0.0 {
                return Ok(Relaxation::Cycle(cycle));
            }
        }
    }
    Err(DistanceError::NoConvergence { rounds: max_rounds })
}

/// A cycle in the graph `t ↦ from(pred[t])`, as edges in traversal order.
pub(crate) fn predecessor_cycle(g: &DiscreteGeometry, pred: &[u32]) -> Option<Vec<usize>> {
    let v = pred.len();
    let mut stamp = vec![usize::MAX; v];
    for start in 0..v {
        let mut t = start;
        while stamp[t] == usize::MAX && pred[t] != NO_EDGE {
            stamp[t] = start;
            t = g.edge(pred[t] as usize).from as usize;
        }
        if stamp[t] == start && pred[t] != NO_EDGE {
            let mut cycle = Vec::new();
            let first = t;
            loop {
                let ei = pred[t] as usize;
                cycle.push(ei);
                t = g.edge(ei).from as usize;
                if t == first {
                    break;
                }
            }
            cycle.reverse();
            return Some(cycle);
        }
    }
    None
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u32);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source search on reduced weights `max(0, w + π(u) − π(v))`.
/// Forward: distances `d(s, ·)` and the last edge into each node.
/// Backward: distances `d(·, s)` and the first edge out of each node.
/// Ties are broken by node index, so results do not depend on scheduling.
pub(crate) fn dijkstra(g: &DiscreteGeometry, pot: &[f64], s: usize, backward: bool) -> (Vec<f64>, Vec<u32>) {
    dijkstra_with(g, pot, s, backward, |e| e.weight)
}

pub(crate) fn dijkstra_with<W>(g: &DiscreteGeometry, pot: &[f64], s: usize, backward: bool, weight: W) -> (Vec<f64>, Vec<u32>)
where
    W: Fn(&Edge) -> f64,
{
    let (red, tree) = search(g, pot, &[(s, 0.0)], backward, weight);
    let dist = red
        .iter()
        .enumerate()
        .map(|(t, &r)| {
            if r.is_infinite() {
                f64::INFINITY
            } else if backward {
                r - pot[t] + pot[s]
            } else {
                r - pot[s] + pot[t]
            }
        })
        .collect();
    (dist, tree)
}

/// Backward search from a node set: `min_{c ∈ targets} d(·, c)`.
pub(crate) fn dijkstra_to_set(g: &DiscreteGeometry, pot: &[f64], targets: &[usize]) -> Vec<f64> {
    let seeds: Vec<(usize, f64)> = targets.iter().map(|&c| (c, pot[c])).collect();
    let (red, _) = search(g, pot, &seeds, true, |e| e.weight);
    red.iter().zip(pot).map(|(r, p)| if r.is_infinite() { f64::INFINITY } else { r - p }).collect()
}

fn search<W>(g: &DiscreteGeometry, pot: &[f64], seeds: &[(usize, f64)], backward: bool, weight: W) -> (Vec<f64>, Vec<u32>)
where
    W: Fn(&Edge) -> f64,
{
    let v = g.node_count();
    let mut red = vec![f64::INFINITY; v];
    let mut tree = vec![NO_EDGE; v];
    let mut done = vec![false; v];
    let mut heap = BinaryHeap::new();
    for &(s, r) in seeds {
        if r < red[s] {
            red[s] = r;
            heap.push(Key(r, s as u32));
        }
    }
    while let Some(Key(d, u)) = heap.pop() {
        let u = u as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        let mut visit = |ei: usize, next: usize| {
            let e = g.edge(ei);
            let r = (weight(e) + pot[e.from as usize] - pot[e.to as usize]).max(0.0);
            let cand = d + r;
            if cand < red[next] {
                red[next] = cand;
                tree[next] = ei as u32;
                heap.push(Key(cand, next as u32));
            }
        };
        if backward {
            for &ei in g.in_edges(u) {
                visit(ei as usize, g.edge(ei as usize).from as usize);
            }
        } else {
            for ei in g.out_range(u) {
                visit(ei, g.edge(ei).to as usize);
            }
        }
    }
    (red, tree)
}

/// Edges of the tree path ending at `t` (forward tree) in traversal order.
pub(crate) fn forward_path(g: &DiscreteGeometry, tree: &[u32], s: usize, t: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut u = t;
    while u != s {
        let ei = tree[u] as usize;
        path.push(ei);
        u = g.edge(ei).from as usize;
    }
    path.reverse();
    path
}

/// Edges of the tree path from `u` to the root `s` of a backward tree.
pub(crate) fn backward_path(g: &DiscreteGeometry, tree: &[u32], s: usize, u: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut x = u;
    while x != s {
        let ei = tree[x] as usize;
        path.push(ei);
        x = g.edge(ei).to as usize;
    }
    path
}
