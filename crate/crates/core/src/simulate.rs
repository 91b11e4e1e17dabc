//! Synthetic networks from a graphon: uniform latent positions, then one
//! independent Bernoulli draw per unordered dyad.

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphon::Graphon;
use crate::positions::NodePositions;
use crate::rng::{self, stream};

/// Parameters of one simulated network.
#[derive(Debug, Clone)]
pub struct SimConfig<'g, G: Graphon> {
    pub n: usize,
    pub seed: u64,
    pub graphon: &'g G,
}

/// `n` independent Uniform(0, 1) draws, never exactly 0 or 1.
pub fn sample_positions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<NodePositions> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 nodes, got {n}")));
    }
    let u: Vec<f64> = (0..n).map(|_| rng.sample(Open01)).collect();
    NodePositions::new(u)
}

/// Draw `y_ij ~ Bernoulli(w(u_i, u_j))` for every `i < j`, in row-major dyad
/// order.
pub fn sample_graph<G: Graphon + ?Sized, R: Rng + ?Sized>(
    graphon: &G,
    positions: &NodePositions,
    rng: &mut R,
) -> Result<Graph> {
    let n = positions.len();
    let mut g = Graph::empty(n)?;
    let u = positions.as_slice();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = graphon.eval_unchecked(u[i], u[j]);
            if rng.random::<f64>() < p {
                g.set_edge(i, j, true);
            }
        }
    }
    Ok(g)
}

/// Shrinkage alternative `(1 - gamma) w + gamma * mean(w)`.
pub fn shrink_alternative<G: Graphon>(g: &G, gamma: f64) -> Result<G> {
    g.shrink_toward_mean(gamma)
}

/// Positions and graph for one network, each from its own child stream of
/// `config.seed`.
pub fn simulate_network<G: Graphon>(config: &SimConfig<'_, G>) -> Result<(Graph, NodePositions)> {
    let mut pos_rng = rng::child_rng(config.seed, &[stream::SIMULATE, stream::POSITIONS]);
    let positions = sample_positions(config.n, &mut pos_rng)?;
    let mut edge_rng = rng::child_rng(config.seed, &[stream::SIMULATE, stream::EDGES]);
    let graph = sample_graph(config.graphon, &positions, &mut edge_rng)?;
    Ok((graph, positions))
}

/// A simulated pair together with the true positions.
#[derive(Debug, Clone)]
pub struct SimulatedPair {
    pub graphs: [Graph; 2],
    pub positions: [NodePositions; 2],
}

/// Simulate network A from `graphon_a` and network B from `graphon_b`, with
/// child seeds `(seed, 0)` and `(seed, 1)`.
pub fn simulate_pair<GA: Graphon, GB: Graphon>(
    graphon_a: &GA,
    graphon_b: &GB,
    n: [usize; 2],
    seed: u64,
) -> Result<SimulatedPair> {
    let (ga, pa) = simulate_network(&SimConfig {
        n: n[0],
        seed: rng::derive_seed(seed, &[0]),
        graphon: graphon_a,
    })?;
    let (gb, pb) = simulate_network(&SimConfig {
        n: n[1],
        seed: rng::derive_seed(seed, &[1]),
        graphon: graphon_b,
    })?;
    Ok(SimulatedPair {
        graphs: [ga, gb],
        positions: [pa, pb],
    })
}
