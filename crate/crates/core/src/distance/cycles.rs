use crate::exec::map_indexed;

use super::graph::{DiscreteGeometry, Edge};

/// Cycle minimizing `Σ num / Σ den` (with `den > 0` on every edge).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCycle {
    pub ratio: f64,
    /// Edge indices in traversal order.
    pub edges: Vec<usize>,
    pub num: f64,
    pub den: f64,
    /// Whether policy iteration reached its optimality certificate.
    pub converged: bool,
}

const MAX_ITERATIONS: usize = 20_000;

/// Howard's policy iteration for the minimum cycle ratio. At termination the
/// node values `x` satisfy `x(u) ≤ num(e) − λ·den(e) + x(v)` on every edge up
/// to a relative tolerance, which certifies `λ` as the minimum.
pub fn min_cycle_ratio<N, D>(g: &DiscreteGeometry, num: N, den: D) -> Option<RatioCycle>
where
    N: Fn(&Edge) -> f64 + Sync,
    D: Fn(&Edge) -> f64 + Sync,
{
    let v = g.node_count();
    if v == 0 || g.edges().is_empty() {
        return None;
    }
    let scale = g.edges().iter().map(|e| num(e).abs() + den(e).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut policy: Vec<usize> = (0..v)
        .map(|u| {
            g.out_range(u)
                .min_by(|&a, &b| {
                    let (ea, eb) = (g.edge(a), g.edge(b));
                    (num(ea) / den(ea)).total_cmp(&(num(eb) / den(eb)))
                })
                .expect("every node has an out-edge")
        })
        .collect();
    let mut converged = false;
    let mut eta = vec![0.0; v];
    let mut x = vec![0.0; v];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..MAX_ITERATIONS {
        evaluate(g, &policy, &num, &den, &mut eta, &mut x, &mut best);
        let lambda = best.as_ref().map(|b| b.0).unwrap_or(f64::INFINITY);
        let proposals = map_indexed(v, |u| {
            let mut pick = None;
            let mut best_eta = eta[u];
            for ei in g.out_range(u) {
                let t = g.edge(ei).to as usize;
                if eta[t] < best_eta - tol {
                    best_eta = eta[t];
                    pick = Some(ei);
                }
            }
            if pick.is_some() {
                return (pick, true);
            }
            let mut best_val = x[u];
            for ei in g.out_range(u) {
                let e = g.edge(ei);
                let t = e.to as usize;
                if (eta[t] - eta[u]).abs() > tol {
                    continue;
                }
                let val = num(e) - eta[u] * den(e) + x[t];
                if val < best_val - tol * (1.0 + x[u].abs()) {
                    best_val = val;
                    pick = Some(ei);
                }
            }
            (pick, false)
        });
        let any_eta = proposals.iter().any(|p| p.1);
        let mut changed = false;
        for (u, (pick, by_eta)) in proposals.into_iter().enumerate() {
            if let Some(ei) = pick {
                if by_eta || !any_eta {
                    policy[u] = ei;
                    changed = true;
                }
            }
        }
        if !changed {
            converged = eta.iter().all(|&e| (e - lambda).abs() <= tol);
            break;
        }
    }
    let (_, edges) = best?;
    let n: f64 = edges.iter().map(|&k| num(g.edge(k))).sum();
    let d: f64 = edges.iter().map(|&k| den(g.edge(k))).sum();
    Some(RatioCycle { ratio: n / d, edges, num: n, den: d, converged })
}

/// Value determination for a policy: per-node cycle ratio `eta` and relative
/// values `x`, and the best policy cycle seen so far.
fn evaluate<N, D>(
    g: &DiscreteGeometry,
    policy: &[usize],
    num: &N,
    den: &D,
    eta: &mut [f64],
    x: &mut [f64],
    best: &mut Option<(f64, Vec<usize>)>,
) where
    N: Fn(&Edge) -> f64,
    D: Fn(&Edge) -> f64,
{
    let v = policy.len();
    let succ = |u: usize| g.edge(policy[u]).to as usize;
    // reverse adjacency of the functional graph
    let mut start = vec![0usize; v + 1];
    for u in 0..v {
        start[succ(u) + 1] += 1;
    }
    for k in 0..v {
        start[k + 1] += start[k];
    }
    let mut fill = start.clone();
    let mut preds = vec![0usize; v];
    for u in 0..v {
        let t = succ(u);
        preds[fill[t]] = u;
        fill[t] += 1;
    }

    let mut state = vec![0u8; v]; // 0 unseen, 1 on current walk, 2 resolved
    let mut queue = Vec::new();
    for s in 0..v {
        if state[s] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut u = s;
        while state[u] == 0 {
            state[u] = 1;
            walk.push(u);
            u = succ(u);
        }
        if state[u] == 1 {
            // new cycle through u
            let pos = walk.iter().position(|&w| w == u).expect("u on walk");
            let cycle_nodes = &walk[pos..];
            let edges: Vec<usize> = cycle_nodes.iter().map(|&w| policy[w]).collect();
            let n: f64 = edges.iter().map(|&k| num(g.edge(k))).sum();
            let d: f64 = edges.iter().map(|&k| den(g.edge(k))).sum();
            let lambda = n / d;
            if best.as_ref().map_or(true, |b| lambda < b.0) {
                *best = Some((lambda, edges));
            }
            let root = u;
            eta[root] = lambda;
            x[root] = 0.0;
            state[root] = 2;
            queue.clear();
            queue.push(root);
            let mut head = 0;
            while head < queue.len() {
                let t = queue[head];
                head += 1;
                for &p in &preds[start[t]..start[t + 1]] {
                    if p == root {
                        continue;
                    }
                    let e = g.edge(policy[p]);
                    eta[p] = lambda;
                    x[p] = num(e) - lambda * den(e) + x[t];
                    state[p] = 2;
                    queue.push(p);
                }
            }
        }
        debug_assert!(walk.iter().all(|&w| state[w] == 2));
    }
}

/// Whether the graph has a cycle with `Σ w < −tol` under the given weights,
/// decided by the minimum of `w/h_len`.
pub fn has_cycle_below<W>(g: &DiscreteGeometry, weight: W, tol: f64) -> Option<RatioCycle>
where
    W: Fn(&Edge) -> f64 + Sync,
{
    let best = min_cycle_ratio(g, &weight, |e| e.h_len)?;
    (best.num < -tol).then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{build_graph, Stencil};
    use crate::fields::{ChartManifold, OneFormField, ScalarField, SymTensorField};
    use crate::metrics::PreRandersMetric;

    fn graph(w: OneFormField, n: usize) -> DiscreteGeometry {
        let m = PreRandersMetric::new(ChartManifold::unit_torus(), SymTensorField::euclidean(), w).unwrap();
        build_graph(&m, n, Stencil::S16).unwrap()
    }

    #[test]
    fn constant_drift_ratio() {
        // min over closed lattice loops of (|v| + ω·v)/|v| is 1 − |ω|
        let g = graph(OneFormField::constant(0.3, -0.4), 12);
        let r = min_cycle_ratio(&g, |e| e.weight, |e| e.h_len).unwrap();
        assert!(r.converged);
        let expect16 = [(-1.0f64, 2.0f64), (-1.0, 1.0), (-1.0, 0.0)]
            .iter()
            .map(|&(a, b)| 1.0 + (0.3 * a - 0.4 * b) / (a * a + b * b).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!((r.ratio - expect16).abs() < 1e-12, "{} vs {}", r.ratio, expect16);
    }

    #[test]
    fn matches_brute_force_on_exact_form_torus() {
        // ω = d(sin 2πx)/(4π): zero periods, so every loop has ∫ω = 0 and the ratio is 1
        let w = OneFormField::new(
            ScalarField::parse("cos(2*pi*x)/2", &Default::default()).unwrap(),
            ScalarField::zero(),
        );
        let g = graph(w, 10);
        let r = min_cycle_ratio(&g, |e| e.weight, |e| e.h_len).unwrap();
        assert!(r.converged);
        assert!(r.ratio > 0.9 && r.ratio <= 1.0 + 1e-9, "{}", r.ratio);
        let first = g.edge(r.edges[0]).from;
        let last = g.edge(*r.edges.last().unwrap()).to;
        assert_eq!(first, last);
        for w in r.edges.windows(2) {
            assert_eq!(g.edge(w[0]).to, g.edge(w[1]).from);
        }
    }

    #[test]
    fn below_threshold_detection() {
        let g = graph(OneFormField::constant(-1.5, 0.0), 8);
        let c = has_cycle_below(&g, |e| e.weight, 1e-9).unwrap();
        assert!(c.num < 0.0);
        assert!(has_cycle_below(&graph(OneFormField::constant(-0.5, 0.0), 8), |e| e.weight, 1e-9).is_none());
    }
}
