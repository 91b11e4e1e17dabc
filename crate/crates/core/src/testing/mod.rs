//! Two-sample test of structural equivalence.
//!
//! Node positions of both networks are cut into `K` equal intervals. For
//! every cell `(k, l)`, `k ≤ l`, the present (`d`) and potential (`m`) edge
//! counts of each network are tallied. Under the null the count `D1` of
//! network 1 given the pooled cell totals is hypergeometric, and
//!
//! ```text
//! t = Σ_{cells with V1 > 0} (d1 - E1)² / V1
//! ```
//!
//! is compared with a `χ²` law (degrees of freedom = usable cells) and with a
//! Monte Carlo sample of the statistic drawn from the hypergeometric laws.

pub mod chi2;
pub mod hypergeom;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::positions::NodePositions;
use crate::rng::{self, stream};

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf};
pub use hypergeom::{hypergeom_moments, hypergeom_sample, Hypergeometric};

/// Equal-width partition of `[0, 1]` into `K` intervals `[k/K, (k+1)/K)`,
/// the last one closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectanglePartition {
    k: usize,
}

impl RectanglePartition {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("partition needs at least one interval".into()));
        }
        Ok(RectanglePartition { k })
    }

    pub fn intervals(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> usize {
        self.k * (self.k + 1) / 2
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.k).map(|i| i as f64 / self.k as f64).collect()
    }

    /// Zero-based interval containing `u`.
    pub fn interval(&self, u: f64) -> usize {
        ((u * self.k as f64).floor() as usize).min(self.k - 1)
    }

    /// Position of cell `(a, b)`, `a ≤ b`, in row-major upper-triangular order.
    pub fn cell_index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * self.k - a * (a + 1) / 2 + b
    }
}

/// `K = max(1, largest K with floor((min(n1, n2) + 1) / K) ≥ min_nodes)`.
pub fn choose_k(n1: usize, n2: usize, min_nodes_per_interval: usize) -> Result<usize> {
    if min_nodes_per_interval == 0 {
        return Err(Error::Usage("min_nodes_per_interval must be at least 1".into()));
    }
    Ok(((n1.min(n2) + 1) / min_nodes_per_interval).max(1))
}

/// Present and potential edge counts of one network, one entry per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkCounts {
    pub d: Vec<u64>,
    pub m: Vec<u64>,
}

/// Tally every unordered dyad into the cell of its sorted interval pair.
pub fn network_counts(
    graph: &Graph,
    positions: &NodePositions,
    partition: &RectanglePartition,
) -> Result<NetworkCounts> {
    if graph.n() != positions.len() {
        return Err(Error::Usage(format!(
            "{} nodes but {} positions",
            graph.n(),
            positions.len()
        )));
    }
    let bins: Vec<usize> = positions
        .as_slice()
        .iter()
        .map(|&u| partition.interval(u))
        .collect();
    let mut d = vec![0u64; partition.cells()];
    let mut m = vec![0u64; partition.cells()];
    for i in 0..graph.n() {
        let row = graph.row(i);
        for j in (i + 1)..graph.n() {
            let c = partition.cell_index(bins[i], bins[j]);
            m[c] += 1;
            d[c] += row[j] as u64;
        }
    }
    Ok(NetworkCounts { d, m })
}

/// Counts of both networks for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub k: usize,
    pub l: usize,
    pub d1: u64,
    pub d2: u64,
    pub m1: u64,
    pub m2: u64,
}

impl CellCounts {
    pub fn d(&self) -> u64 {
        self.d1 + self.d2
    }

    pub fn m(&self) -> u64 {
        self.m1 + self.m2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectangleCounts {
    pub partition: RectanglePartition,
    /// Row-major over `k ≤ l`.
    pub cells: Vec<CellCounts>,
}

pub fn rectangle_counts(
    graphs: [&Graph; 2],
    positions: [&NodePositions; 2],
    partition: &RectanglePartition,
) -> Result<RectangleCounts> {
    let a = network_counts(graphs[0], positions[0], partition)?;
    let b = network_counts(graphs[1], positions[1], partition)?;
    let mut cells = Vec::with_capacity(partition.cells());
    for k in 0..partition.intervals() {
        for l in k..partition.intervals() {
            let c = partition.cell_index(k, l);
            cells.push(CellCounts {
                k,
                l,
                d1: a.d[c],
                d2: b.d[c],
                m1: a.m[c],
                m2: b.m[c],
            });
        }
    }
    Ok(RectangleCounts {
        partition: *partition,
        cells,
    })
}

/// One row of the statistic's breakdown. `e1`, `v1` are `None` for cells
/// without dyads; `contrib` is `None` for omitted cells (`V1 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTerm {
    pub k: usize,
    pub l: usize,
    pub d1: u64,
    pub d2: u64,
    pub m1: u64,
    pub m2: u64,
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "V1")]
    pub v1: Option<f64>,
    pub contrib: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statistic {
    pub t: f64,
    pub cells_used: usize,
    pub terms: Vec<CellTerm>,
}

pub fn test_statistic(counts: &RectangleCounts) -> Result<Statistic> {
    let mut t = 0.0;
    let mut cells_used = 0;
    let mut terms = Vec::with_capacity(counts.cells.len());
    for c in &counts.cells {
        let moments = hypergeom_moments(c.m(), c.d(), c.m1)?;
        let contrib = match moments {
            Some((e, v)) if v > 0.0 => {
                let x = (c.d1 as f64 - e).powi(2) / v;
                t += x;
                cells_used += 1;
                Some(x)
            }
            _ => None,
        };
        terms.push(CellTerm {
            k: c.k,
            l: c.l,
            d1: c.d1,
            d2: c.d2,
            m1: c.m1,
            m2: c.m2,
            e1: moments.map(|m| m.0),
            v1: moments.map(|m| m.1),
            contrib,
        });
    }
    if cells_used == 0 {
        return Err(Error::DegenerateTest);
    }
    Ok(Statistic {
        t,
        cells_used,
        terms,
    })
}

/// Sorted Monte Carlo sample of the statistic under the null: every usable
/// cell's `D1` is redrawn from its hypergeometric law. Replicate `r` draws
/// from its own child stream of `seed`, so the result does not depend on the
/// thread count.
pub fn simulate_null(counts: &RectangleCounts, n_sims: usize, seed: u64) -> Result<Vec<f64>> {
    if n_sims == 0 {
        return Err(Error::Usage("n_sims must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for c in &counts.cells {
        if let Some((e, v)) = hypergeom_moments(c.m(), c.d(), c.m1)? {
            if v > 0.0 {
                cells.push((Hypergeometric::new(c.m(), c.d(), c.m1)?, e, v));
            }
        }
    }
    let mut sample: Vec<f64> = (0..n_sims as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::child_rng(seed, &[stream::NULL_SIM, r]);
            cells
                .iter()
                .map(|(h, e, v)| (h.sample(&mut rng) as f64 - e).powi(2) / v)
                .sum::<f64>()
        })
        .collect();
    sample.sort_by(f64::total_cmp);
    Ok(sample)
}

/// The `p`-quantile of a sorted sample as the `ceil(p·n)`-th order statistic.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// `(1 + #{T ≥ t}) / (n_sims + 1)`.
pub fn simulated_pvalue(sorted: &[f64], t: f64) -> f64 {
    let below = sorted.partition_point(|&x| x < t);
    (1 + sorted.len() - below) as f64 / (sorted.len() + 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    /// Intervals per axis; `None` picks [`choose_k`].
    pub k: Option<usize>,
    pub min_nodes_per_interval: usize,
    pub alpha: f64,
    pub n_sims: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            k: None,
            min_nodes_per_interval: 10,
            alpha: 0.05,
            n_sims: 10_000,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n_sims == 0 {
            return Err(Error::Config("n_sims must be at least 1".into()));
        }
        if self.k == Some(0) || self.min_nodes_per_interval == 0 {
            return Err(Error::Config("K and min_nodes_per_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub t: f64,
    /// Degrees of freedom of the asymptotic law (the usable cell count).
    pub df: usize,
    pub cells_used: usize,
    pub alpha: f64,
    pub n_sims: usize,
    pub p_asym: f64,
    pub p_sim: f64,
    pub crit_asym: f64,
    pub crit_sim: f64,
    pub reject_asym: bool,
    pub reject_sim: bool,
    pub contributions: Vec<CellTerm>,
}

/// Counts, statistic, both null flavors and decisions at `config.alpha`.
pub fn run_test(
    graphs: [&Graph; 2],
    positions: [&NodePositions; 2],
    config: &TestConfig,
) -> Result<TestReport> {
    config.validate()?;
    let k = match config.k {
        Some(k) => k,
        None => choose_k(graphs[0].n(), graphs[1].n(), config.min_nodes_per_interval)?,
    };
    let partition = RectanglePartition::new(k)?;
    let counts = rectangle_counts(graphs, positions, &partition)?;
    let stat = test_statistic(&counts)?;
    let null = simulate_null(&counts, config.n_sims, config.seed)?;
    let df = stat.cells_used as f64;
    let crit_asym = chi2_quantile(1.0 - config.alpha, df);
    let crit_sim = empirical_quantile(&null, 1.0 - config.alpha);
    Ok(TestReport {
        k,
        t: stat.t,
        df: stat.cells_used,
        cells_used: stat.cells_used,
        alpha: config.alpha,
        n_sims: config.n_sims,
        p_asym: chi2_sf(stat.t, df),
        p_sim: simulated_pvalue(&null, stat.t),
        crit_asym,
        crit_sim,
        reject_asym: stat.t > crit_asym,
        reject_sim: stat.t > crit_sim,
        contributions: stat.terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::GridGraphon;
    use crate::simulate::simulate_pair;

    #[test]
    fn choose_k_examples() {
        assert_eq!(choose_k(200, 300, 10).unwrap(), 20);
        assert_eq!(choose_k(300, 200, 10).unwrap(), 20);
        assert_eq!(choose_k(5, 300, 10).unwrap(), 1);
        assert_eq!(choose_k(116, 116, 10).unwrap(), 11);
        assert!(choose_k(10, 10, 0).is_err());
        for n in 2..400 {
            let k = choose_k(n, n + 3, 10).unwrap();
            if k > 1 {
                assert!((n + 1) / k >= 10);
                assert!((n + 1) / (k + 1) < 10);
            }
        }
    }

    #[test]
    fn partition_intervals() {
        let p = RectanglePartition::new(4).unwrap();
        assert_eq!(p.boundaries(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(p.interval(0.0), 0);
        assert_eq!(p.interval(0.25), 1);
        assert_eq!(p.interval(0.9999), 3);
        assert_eq!(p.interval(1.0), 3);
        let mut seen = Vec::new();
        for a in 0..4 {
            for b in a..4 {
                seen.push(p.cell_index(a, b));
            }
        }
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(p.cell_index(3, 1), p.cell_index(1, 3));
    }

    #[test]
    fn four_node_assignment() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let pos = NodePositions::new(vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let p = RectanglePartition::new(2).unwrap();
        let c = network_counts(&g, &pos, &p).unwrap();
        assert_eq!(c.m, vec![1, 4, 1]);
        assert_eq!(c.d, vec![1, 2, 1]);
        let one = network_counts(&g, &pos, &RectanglePartition::new(1).unwrap()).unwrap();
        assert_eq!(one.m, vec![6]);
        assert_eq!(one.d, vec![4]);
    }

    #[test]
    fn single_cell_statistic() {
        let counts = RectangleCounts {
            partition: RectanglePartition::new(1).unwrap(),
            cells: vec![CellCounts {
                k: 0,
                l: 0,
                d1: 4,
                d2: 0,
                m1: 5,
                m2: 5,
            }],
        };
        let s = test_statistic(&counts).unwrap();
        assert!((s.t - 6.0).abs() < 1e-12);
        assert_eq!(s.cells_used, 1);
    }

    #[test]
    fn degenerate_when_no_variance() {
        let counts = RectangleCounts {
            partition: RectanglePartition::new(1).unwrap(),
            cells: vec![CellCounts {
                k: 0,
                l: 0,
                d1: 0,
                d2: 0,
                m1: 5,
                m2: 5,
            }],
        };
        assert!(matches!(test_statistic(&counts), Err(Error::DegenerateTest)));
    }

    #[test]
    fn identical_networks_give_zero() {
        let w = GridGraphon::reference_blocks();
        let pair = simulate_pair(&w, &w, [60, 60], 3).unwrap();
        let g = &pair.graphs[0];
        let p = &pair.positions[0];
        let cfg = TestConfig {
            n_sims: 500,
            ..Default::default()
        };
        let r = run_test([g, g], [p, p], &cfg).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_sim, 1.0);
        assert!((r.p_asym - 1.0).abs() < 1e-15);
        assert!(!r.reject_asym && !r.reject_sim);
    }

    #[test]
    fn pvalue_and_quantile_helpers() {
        let s = vec![1.0, 2.0, 2.0, 3.0];
        assert_eq!(simulated_pvalue(&s, 2.0), 4.0 / 5.0);
        assert_eq!(simulated_pvalue(&s, 10.0), 1.0 / 5.0);
        assert_eq!(simulated_pvalue(&s, 0.0), 1.0);
        assert_eq!(empirical_quantile(&s, 0.5), 2.0);
        assert_eq!(empirical_quantile(&s, 0.95), 3.0);
        assert_eq!(empirical_quantile(&[7.0], 0.95), 7.0);
    }

    #[test]
    fn null_sample_is_deterministic_and_sorted() {
        let w = GridGraphon::reference_blocks();
        let pair = simulate_pair(&w, &w, [50, 70], 5).unwrap();
        let p = RectanglePartition::new(5).unwrap();
        let c = rectangle_counts(
            [&pair.graphs[0], &pair.graphs[1]],
            [&pair.positions[0], &pair.positions[1]],
            &p,
        )
        .unwrap();
        let a = simulate_null(&c, 300, 9).unwrap();
        let b = simulate_null(&c, 300, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(simulate_null(&c, 1, 9).unwrap().len(), 1);
        assert!(simulate_null(&c, 0, 9).is_err());
    }
}
