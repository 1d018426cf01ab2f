//! Drift-form quantities: efficiency of loops, the weight `wt(θ)` as a
//! maximum cycle ratio on the grid graph, and the case split it induces.
//!
//! Sign convention: the drift form is `θ = −ω/β`, so that
//! `F(v) = −θ(v) + √h̃(v,v)` with `h̃` the Fermat `h`. On a graph edge,
//! `∫θ = −omega_int` and the `h̃`-length is `h_len`.

use std::fmt;

use thiserror::Error;

use crate::causality::{LadderReport, Verdict};
use crate::distance::{
    distances_from, distances_from_with, distances_to, has_cycle_below, min_cycle_ratio, scan_nodes,
    symmetrized_row, DiscreteGeometry, PreDistanceResult,
};
use crate::fields::{winding_add, ChartManifold, Curve, OneFormField, Point, SymTensorField, Vector, Winding};
use crate::geodesic::{periodic_search, PeriodicOptions};
use crate::metrics::{MetricError, PreRandersMetric, SOMSpacetime};

/// `ε_wt`.
pub const EPS_WT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarrisError {
    #[error("efficiency undefined: the curve has zero h-length")]
    ZeroLength,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone)]
pub struct DriftData {
    pub h_tilde: SymTensorField,
    pub theta: OneFormField,
}

impl DriftData {
    pub fn from_pre_randers(m: &PreRandersMetric) -> Self {
        Self { h_tilde: m.h().clone(), theta: m.omega().neg() }
    }

    /// `h̃ = ω⊗ω/β² + g₀/β`, `θ = −ω/β`.
    pub fn from_som(m: &SOMSpacetime) -> Self {
        let w = m.omega.div_field(&m.beta);
        Self { h_tilde: SymTensorField::outer(&w).add(&m.g0.div_field(&m.beta)), theta: w.neg() }
    }

    /// `−θ(v) + √h̃(v,v)`.
    pub fn fermat(&self, p: &Point, v: &Vector) -> f64 {
        self.h_tilde.quad(p, v).max(0.0).sqrt() - self.theta.apply(p, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// `∫θ / L`.
    pub eff: f64,
    /// `L − ∫θ`, which equals `ℓ_F`.
    pub l_theta: f64,
    pub length: f64,
    pub theta_integral: f64,
}

pub fn efficiency(c: &Curve, data: &DriftData, chart: &ChartManifold) -> Result<Efficiency, HarrisError> {
    let length = c.integrate(|p, v| data.h_tilde.quad(&chart.wrap(p), v).max(0.0).sqrt());
    if !(length > 0.0) {
        return Err(HarrisError::ZeroLength);
    }
    let theta_integral = c.integrate(|p, v| data.theta.apply(&chart.wrap(p), v));
    Ok(Efficiency { eff: theta_integral / length, l_theta: length - theta_integral, length, theta_integral })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub wt: f64,
    /// Edges of a cycle attaining `wt` on the graph.
    pub cycle: Vec<usize>,
    pub cycle_winding: Winding,
    /// `L_θ` of that cycle.
    pub cycle_l_theta: f64,
    pub converged: bool,
}

/// `wt(θ) = sup_C ∫_C θ / L(C)` over graph cycles, by policy iteration on
/// the cycle ratio.
pub fn weight(g: &DiscreteGeometry) -> Weight {
    let r = min_cycle_ratio(g, |e| e.omega_int, |e| e.h_len).expect("grid graphs have cycles");
    let winding = r.edges.iter().fold([0, 0], |w, &k| winding_add(w, g.edge(k).winding));
    let cycle_l_theta = r.edges.iter().map(|&k| g.edge(k).weight).sum();
    Weight { wt: -r.ratio, cycle: r.edges, cycle_winding: winding, cycle_l_theta, converged: r.converged }
}

/// The same supremum by bisection on `λ` with a negative-cycle oracle on
/// `λ·len − ∫θ`, bracketed by `±max|θ|_h̃` over edges.
pub fn weight_by_bisection(g: &DiscreteGeometry, tol: f64) -> f64 {
    let bound = g.edges().iter().map(|e| (e.omega_int / e.h_len).abs()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > tol * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let positive = crate::distance::has_negative_cycle(g, |e| mid * e.h_len + e.omega_int).unwrap_or(true);
        if positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarrisCase {
    /// `wt > 1`: chronologically vicious.
    One,
    /// `wt = 1` and a loop with `L_θ = 0`.
    Two,
    /// `wt = 1` without a zero loop: cases 3–5, told apart only by loop
    /// sequences; see the δ-ladder.
    ThreeToFive,
    /// `wt < 1`: strongly causal and causally bounded.
    Six,
}

impl fmt::Display for HarrisCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HarrisCase::One => "case 1 (wt > 1, vicious)",
            HarrisCase::Two => "case 2 (wt = 1, zero-length loop)",
            HarrisCase::ThreeToFive => "cases 3-5 (wt = 1, no zero-length loop found)",
            HarrisCase::Six => "case 6 (wt < 1)",
        })
    }
}

/// Smallest `L_θ` among candidate loops with efficiency at least `1 − δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRow {
    pub delta: f64,
    pub min_l_theta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct HarrisReport {
    pub weight: Weight,
    pub case: HarrisCase,
    /// `|wt − 1| ≤ ε_wt`.
    pub marginal: bool,
    pub delta_ladder: Vec<DeltaRow>,
    /// `wt ≤ 1 + ε_wt` agrees with the absence of cycles below `−ε_zero`.
    pub bridge_holds: bool,
    /// Agreement with the causal ladder when one was supplied.
    pub routes_agree: Option<bool>,
}

const DELTAS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Candidate loops: the weight-attaining cycle, the shortest closed path on
/// the graph, and continuum loops in classes `|w_i| ≤ 1`.
fn candidate_loops(g: &DiscreteGeometry, metric: &PreRandersMetric, w: &Weight) -> Vec<(f64, f64)> {
    let eff_of = |edges: &[usize]| {
        let len: f64 = edges.iter().map(|&k| g.edge(k).h_len).sum();
        let th: f64 = edges.iter().map(|&k| -g.edge(k).omega_int).sum();
        (th / len, len - th)
    };
    let mut out = vec![eff_of(&w.cycle)];
    if let Ok(Ok(pot)) = crate::distance::node_potential(g) {
        let scan = scan_nodes(g, &pot);
        out.push(eff_of(&scan.min_cycle_edges));
    }
    let chart = metric.chart();
    if chart.has_periodic_axis() {
        let data = DriftData::from_pre_randers(metric);
        let popts = PeriodicOptions { vertices: 48, max_iterations: 1500, ..Default::default() };
        for a in -1i64..=1 {
            for b in -1i64..=1 {
                let wind = [a, b];
                if wind == [0, 0] || (0..2).any(|k| wind[k] != 0 && !chart.is_periodic(k)) {
                    continue;
                }
                if let Ok(l) = periodic_search(metric, wind, &popts) {
                    if let Ok(e) = efficiency(&l.curve, &data, chart) {
                        out.push((e.eff, e.l_theta));
                    }
                }
            }
        }
    }
    out
}

pub fn harris_classify(g: &DiscreteGeometry, metric: &PreRandersMetric, ladder: Option<&LadderReport>) -> HarrisReport {
    let w = weight(g);
    let eps_zero = g.eps_zero();
    let marginal = (w.wt - 1.0).abs() <= EPS_WT;
    let loops = candidate_loops(g, metric, &w);
    let delta_ladder: Vec<DeltaRow> = DELTAS
        .iter()
        .map(|&delta| DeltaRow {
            delta,
            min_l_theta: loops.iter().filter(|l| l.0 >= 1.0 - delta).map(|l| l.1).min_by(f64::total_cmp),
        })
        .collect();
    let case = if w.wt > 1.0 + EPS_WT {
        HarrisCase::One
    } else if w.wt < 1.0 - EPS_WT {
        HarrisCase::Six
    } else {
        let zero_loop = loops.iter().any(|l| l.0 >= 1.0 - EPS_WT && l.1.abs() <= eps_zero);
        if zero_loop {
            HarrisCase::Two
        } else {
            HarrisCase::ThreeToFive
        }
    };
    let negative = has_cycle_below(g, |e| e.weight, eps_zero).is_some();
    let bridge_holds = (w.wt <= 1.0 + EPS_WT) == !negative;
    let routes_agree = ladder.map(|r| match case {
        HarrisCase::One => r.totally_vicious.verdict == Verdict::Holds,
        HarrisCase::Two => r.chronological.verdict == Verdict::Holds && r.causal.verdict == Verdict::Fails,
        HarrisCase::ThreeToFive => r.chronological.verdict == Verdict::Holds,
        HarrisCase::Six => r.distinguishing.verdict == Verdict::Holds,
    });
    HarrisReport { weight: w, case, marginal, delta_ladder, bridge_holds, routes_agree }
}

impl fmt::Display for HarrisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wt = {:.6}", self.weight.wt)?;
        writeln!(f, "{}{}", self.case, if self.marginal { " [MARGINAL]" } else { "" })?;
        writeln!(f, "achieving cycle: {} edges, winding {:?}, L_theta = {:.6e}", self.weight.cycle.len(), self.weight.cycle_winding, self.weight.cycle_l_theta)?;
        for row in &self.delta_ladder {
            match row.min_l_theta {
                Some(l) => writeln!(f, "delta {:.0e}: min L_theta {:.6e}", row.delta, l)?,
                None => writeln!(f, "delta {:.0e}: no candidate loop", row.delta)?,
            }
        }
        writeln!(f, "bridge (wt <= 1 iff no negative cycle): {}", self.bridge_holds)?;
        if let Some(a) = self.routes_agree {
            writeln!(f, "agrees with causal ladder: {a}")?;
        }
        Ok(())
    }
}

/// `d_s(x, ·) ≤ d_h̃(x, ·)` node-wise; returns the largest violation.
pub fn ball_inclusion_defect(g: &DiscreteGeometry, potential: &[f64], x: usize) -> f64 {
    let ds = symmetrized_row(g, potential, x);
    let dh = distances_from_with(g, x, |e| e.h_len);
    ds.iter().zip(&dh).map(|(s, h)| s - h).fold(f64::NEG_INFINITY, f64::max)
}

/// Projection of the chronological diamond between `(Ω₀, x₀)` and `(Ω₁, x₀)`,
/// sampled at `samples` intermediate times, compared with the symmetrized
/// ball of radius `(Ω₁ − Ω₀)/2`. Returns nodes in the symmetric difference
/// that have no 8-neighbor of opposite ball membership.
pub fn diamond_mismatch(d: &PreDistanceResult, g: &DiscreteGeometry, x0: usize, omega0: f64, omega1: f64, samples: usize) -> Vec<usize> {
    let Some(f) = d.finite() else {
        return Vec::new();
    };
    let pot = f.potential();
    let from = distances_from(g, pot, x0);
    let to = distances_to(g, pot, x0);
    let dt = (omega1 - omega0) / samples as f64;
    let grid = g.grid();
    let v = g.node_count();
    let diamond: Vec<bool> = (0..v)
        .map(|y| {
            (0..samples).any(|k| {
                let t = omega0 + (k as f64 + 0.5) * dt;
                omega0 + from[y] < t && t + to[y] < omega1
            })
        })
        .collect();
    let radius = 0.5 * (omega1 - omega0);
    let in_ball: Vec<bool> = (0..v).map(|y| 0.5 * (from[y] + to[y]) < radius).collect();
    const RING: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
    (0..v)
        .filter(|&y| diamond[y] != in_ball[y])
        .filter(|&y| {
            !RING
                .iter()
                .filter_map(|&o| grid.neighbor(y, o))
                .any(|(z, _)| in_ball[z] != in_ball[y])
        })
        .collect()
}

#[cfg(test)]
mod tests;
