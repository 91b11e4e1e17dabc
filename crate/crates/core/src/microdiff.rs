//! Localizing differences between two networks on a common alignment.
//!
//! Each network gets its own penalized spline fit on the joint positions.
//! The standardized difference
//!
//! ```text
//! diff_ab(u, v) = (w_a - w_b) / sqrt((w_a(1 - w_a) + w_b(1 - w_b)) / 2)
//! ```
//!
//! scores single dyads: a present edge of network `a` counts with
//! `max(0, diff_ab)`, an absent one with `max(0, diff_ba)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estep::PROB_EPS;
use crate::graph::Graph;
use crate::graphon::{Graphon, SplineGraphon};
use crate::mstep::{self, FitResult, MStepConfig};
use crate::positions::NodePositions;

/// Fit one network alone on positions from the joint fit, with its own
/// AICc-selected penalty.
pub fn separate_mstep(
    graph: &Graph,
    positions: &NodePositions,
    config: &MStepConfig,
) -> Result<FitResult> {
    mstep::select_lambda(&[graph], &[positions], config, None)
}

const MIN_VARIANCE: f64 = PROB_EPS * (1.0 - PROB_EPS);

/// Standardized difference of two edge probabilities.
pub fn standardized_difference(w1: f64, w2: f64) -> f64 {
    let var = 0.5 * (w1 * (1.0 - w1) + w2 * (1.0 - w2));
    (w1 - w2) / var.max(MIN_VARIANCE).sqrt()
}

/// `diff_(1)(2)(u, v)` for two fitted graphons.
pub fn w_diff<G1: Graphon + ?Sized, G2: Graphon + ?Sized>(
    first: &G1,
    second: &G2,
    u: f64,
    v: f64,
) -> f64 {
    standardized_difference(first.eval_unchecked(u, v), second.eval_unchecked(u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    A,
    B,
}

/// The pair of separate fits behind both directed difference surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSurface {
    pub fits: [FitResult; 2],
}

impl DiffSurface {
    pub fn new(fit_a: FitResult, fit_b: FitResult) -> Self {
        DiffSurface {
            fits: [fit_a, fit_b],
        }
    }

    fn graphon(&self, which: Network) -> &SplineGraphon {
        match which {
            Network::A => &self.fits[0].graphon,
            Network::B => &self.fits[1].graphon,
        }
    }

    /// `diff_(from)(other)(u, v)`.
    pub fn directed(&self, from: Network, u: f64, v: f64) -> f64 {
        let other = match from {
            Network::A => Network::B,
            Network::B => Network::A,
        };
        w_diff(self.graphon(from), self.graphon(other), u, v)
    }

    /// Rows `(u, v, w_a, w_b, diff_ab)` on a `res × res` grid over `[0, 1]²`.
    pub fn grid(&self, res: usize) -> Vec<[f64; 5]> {
        let step = 1.0 / (res.max(2) - 1) as f64;
        let mut rows = Vec::with_capacity(res * res);
        for a in 0..res {
            for b in 0..res {
                let (u, v) = (a as f64 * step, b as f64 * step);
                let wa = self.fits[0].graphon.eval_unchecked(u, v);
                let wb = self.fits[1].graphon.eval_unchecked(u, v);
                rows.push([u, v, wa, wb, standardized_difference(wa, wb)]);
            }
        }
        rows
    }
}

/// Contribution of dyad `(i, j)` of network `which` to the detected
/// differences.
pub fn edge_contribution(
    graph: &Graph,
    which: Network,
    i: usize,
    j: usize,
    positions: &NodePositions,
    surface: &DiffSurface,
) -> Result<f64> {
    if i == j {
        return Err(Error::Usage(format!("edge contribution needs two nodes, got ({i}, {i})")));
    }
    if i >= graph.n() || j >= graph.n() || positions.len() != graph.n() {
        return Err(Error::Usage("node index or position vector out of range".into()));
    }
    Ok(contribution(graph, which, i, j, positions, surface))
}

fn contribution(
    graph: &Graph,
    which: Network,
    i: usize,
    j: usize,
    positions: &NodePositions,
    surface: &DiffSurface,
) -> f64 {
    let d = surface.directed(which, positions[i], positions[j]);
    let signed = if graph.has_edge(i, j) { d } else { -d };
    signed.max(0.0)
}

/// Per node, the summed contribution of all incident dyads.
pub fn node_impact(
    graph: &Graph,
    which: Network,
    positions: &NodePositions,
    surface: &DiffSurface,
) -> Result<Vec<f64>> {
    if positions.len() != graph.n() {
        return Err(Error::Usage("position vector length mismatch".into()));
    }
    let n = graph.n();
    let mut impact = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = contribution(graph, which, i, j, positions, surface);
            impact[i] += c;
            impact[j] += c;
        }
    }
    Ok(impact)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeContribution {
    pub i: usize,
    pub j: usize,
    pub source: String,
    pub target: String,
    pub contrib: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDiff {
    /// Largest contributions among present edges.
    pub present: Vec<EdgeContribution>,
    /// Largest contributions among absent edges.
    pub absent: Vec<EdgeContribution>,
    pub node_impact: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub lambda: [f64; 2],
    pub df: [f64; 2],
    pub top_q: usize,
    pub a: NetworkDiff,
    pub b: NetworkDiff,
}

fn top_edges(
    graph: &Graph,
    which: Network,
    positions: &NodePositions,
    surface: &DiffSurface,
    present: bool,
    q: usize,
) -> Vec<EdgeContribution> {
    let mut all = Vec::new();
    for i in 0..graph.n() {
        for j in (i + 1)..graph.n() {
            if graph.has_edge(i, j) != present {
                continue;
            }
            let c = contribution(graph, which, i, j, positions, surface);
            if c > 0.0 {
                all.push((c, i, j));
            }
        }
    }
    all.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    all.truncate(q);
    all.into_iter()
        .map(|(contrib, i, j)| EdgeContribution {
            i,
            j,
            source: graph.label(i),
            target: graph.label(j),
            contrib,
        })
        .collect()
}

/// Separate fits (concurrently), then top-`q` present and absent edges and
/// node impacts for both networks.
pub fn analyze(
    graphs: [&Graph; 2],
    positions: [&NodePositions; 2],
    config: &MStepConfig,
    top_q: usize,
) -> Result<(DiffSurface, DiffReport)> {
    let (fa, fb) = rayon::join(
        || separate_mstep(graphs[0], positions[0], config),
        || separate_mstep(graphs[1], positions[1], config),
    );
    let surface = DiffSurface::new(fa?, fb?);
    let side = |g: usize, which: Network| -> Result<NetworkDiff> {
        Ok(NetworkDiff {
            present: top_edges(graphs[g], which, positions[g], &surface, true, top_q),
            absent: top_edges(graphs[g], which, positions[g], &surface, false, top_q),
            node_impact: node_impact(graphs[g], which, positions[g], &surface)?,
        })
    };
    let report = DiffReport {
        lambda: [surface.fits[0].lambda, surface.fits[1].lambda],
        df: [surface.fits[0].df, surface.fits[1].df],
        top_q,
        a: side(0, Network::A)?,
        b: side(1, Network::B)?,
    };
    Ok((surface, report))
}
