//! Metropolis-within-Gibbs sampler over latent node positions for a fixed
//! graphon, posterior means, and the rank adjustment onto `r / (n + 1)`.
//!
//! Each node update proposes on the logit scale,
//! `u* = logit⁻¹(logit(u) + N(0, σ_v²))`, and accepts with probability
//! `min{1, f(u*) / f(u) · u*(1 - u*) / (u(1 - u))}` where `f` is the full
//! conditional of the node given all others.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphon::Graphon;
use crate::positions::{rank_adjust, NodePositions};
use crate::rng;

/// Probability clipping inside every log-likelihood evaluation.
pub const PROB_EPS: f64 = 1e-6;

const ADAPT_WINDOW: usize = 10;
const ADAPT_FACTOR: f64 = 1.1;
const ADAPT_TARGET: f64 = 0.4;
const POSITION_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    /// Proposal standard deviation on the logit scale.
    pub sigma_v: f64,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_keep: usize,
    /// Tune `sigma_v` during burn-in towards 40 % acceptance.
    pub adapt: bool,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            sigma_v: 1.0,
            burn_in: 50,
            thinning: 5,
            n_keep: 30,
            adapt: true,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_v > 0.0 && self.sigma_v.is_finite()) {
            return Err(Error::Config(format!("sigma_v must be positive, got {}", self.sigma_v)));
        }
        if self.thinning < 1 || self.n_keep < 1 {
            return Err(Error::Config("thinning and n_keep must be at least 1".into()));
        }
        Ok(())
    }
}

/// Current Markov chain state with per-node acceptance counters.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub u: Vec<f64>,
    pub accepted: Vec<u64>,
    pub proposed: Vec<u64>,
}

impl ChainState {
    pub fn new(init: &NodePositions) -> Self {
        let n = init.len();
        ChainState {
            u: init.as_slice().to_vec(),
            accepted: vec![0; n],
            proposed: vec![0; n],
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        let p: u64 = self.proposed.iter().sum();
        if p == 0 {
            return 0.0;
        }
        self.accepted.iter().sum::<u64>() as f64 / p as f64
    }

    fn reset_counters(&mut self) {
        self.accepted.iter_mut().for_each(|a| *a = 0);
        self.proposed.iter_mut().for_each(|p| *p = 0);
    }
}

#[inline]
fn clip(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

#[inline]
fn bernoulli_loglik(y: u8, p: f64) -> f64 {
    let p = clip(p);
    if y == 1 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

/// `Σ_{j≠i} [y_ij log w(u, u_j) + (1 - y_ij) log(1 - w(u, u_j))]` with `w`
/// clipped to `[ε, 1 - ε]`.
pub fn full_conditional_logdensity<G: Graphon + ?Sized>(
    graphon: &G,
    graph: &Graph,
    positions: &[f64],
    i: usize,
    u: f64,
) -> f64 {
    let row = graph.row(i);
    let mut total = 0.0;
    for (j, (&y, &uj)) in row.iter().zip(positions).enumerate() {
        if j != i {
            total += bernoulli_loglik(y, graphon.eval_unchecked(u, uj));
        }
    }
    total
}

/// Log full-conditional difference `log f(u_new) - log f(u_old)` in one pass.
fn log_conditional_ratio<G: Graphon + ?Sized>(
    graphon: &G,
    graph: &Graph,
    positions: &[f64],
    i: usize,
    u_old: f64,
    u_new: f64,
) -> f64 {
    let row = graph.row(i);
    let mut total = 0.0;
    for (j, (&y, &uj)) in row.iter().zip(positions).enumerate() {
        if j != i {
            total += bernoulli_loglik(y, graphon.eval_unchecked(u_new, uj))
                - bernoulli_loglik(y, graphon.eval_unchecked(u_old, uj));
        }
    }
    total
}

#[inline]
fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

#[inline]
fn inv_logit(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `ln[u*(1 - u*)] - ln[u(1 - u)]`, the log of `q(u | u*) / q(u* | u)`.
#[inline]
pub fn log_proposal_ratio(u_cur: f64, u_star: f64) -> f64 {
    (u_star * (1.0 - u_star)).ln() - (u_cur * (1.0 - u_cur)).ln()
}

/// Map a logit-scale increment to a proposal and its log proposal ratio.
pub fn propose_with_increment(u_cur: f64, increment: f64) -> (f64, f64) {
    let u_star = inv_logit(logit(u_cur) + increment).clamp(POSITION_CLAMP, 1.0 - POSITION_CLAMP);
    (u_star, log_proposal_ratio(u_cur, u_star))
}

/// Logit-normal random-walk proposal.
pub fn propose<R: Rng + ?Sized>(u_cur: f64, sigma_v: f64, rng: &mut R) -> (f64, f64) {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    propose_with_increment(u_cur, sigma_v * z)
}

/// Metropolis-Hastings decision for node `i`; updates `positions[i]` on
/// acceptance.
pub fn mh_accept<G: Graphon + ?Sized, R: Rng + ?Sized>(
    graphon: &G,
    graph: &Graph,
    positions: &mut [f64],
    i: usize,
    u_star: f64,
    log_prop_ratio: f64,
    rng: &mut R,
) -> bool {
    let u_cur = positions[i];
    let log_alpha =
        log_conditional_ratio(graphon, graph, positions, i, u_cur, u_star) + log_prop_ratio;
    let accept = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
    if accept {
        positions[i] = u_star;
    }
    accept
}

/// Retained samples and diagnostics of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// `n_keep` rows, each a full position vector.
    pub samples: Vec<Vec<f64>>,
    /// Acceptance rate over the retained (post burn-in) sweeps.
    pub acceptance_rate: f64,
    /// Proposal scale after burn-in adaptation.
    pub sigma_v: f64,
}

/// Run `burn_in + n_keep * thinning` sweeps (ascending node order) from
/// `init` and keep every `thinning`-th post burn-in state.
pub fn run_chain<G: Graphon + ?Sized>(
    graph: &Graph,
    graphon: &G,
    config: &GibbsConfig,
    init: &NodePositions,
) -> Result<ChainOutput> {
    config.validate()?;
    if init.len() != graph.n() {
        return Err(Error::Usage(format!(
            "{} initial positions for {} nodes",
            init.len(),
            graph.n()
        )));
    }
    let n = graph.n();
    let mut rng = rng::rng_from_seed(config.seed);
    let mut state = ChainState::new(init);
    let mut sigma = config.sigma_v;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let sweep = |state: &mut ChainState, sigma: f64, rng: &mut rng::Rng| {
        for i in 0..n {
            let (u_star, lpr) = propose_with_increment(state.u[i], sigma * normal.sample(rng));
            state.proposed[i] += 1;
            if mh_accept(graphon, graph, &mut state.u, i, u_star, lpr, rng) {
                state.accepted[i] += 1;
            }
        }
    };

    for t in 0..config.burn_in {
        sweep(&mut state, sigma, &mut rng);
        if config.adapt && (t + 1) % ADAPT_WINDOW == 0 {
            if state.acceptance_rate() > ADAPT_TARGET {
                sigma *= ADAPT_FACTOR;
            } else {
                sigma /= ADAPT_FACTOR;
            }
            state.reset_counters();
        }
    }
    state.reset_counters();

    let mut samples = Vec::with_capacity(config.n_keep);
    for s in 1..=config.n_keep * config.thinning {
        sweep(&mut state, sigma, &mut rng);
        if s % config.thinning == 0 {
            samples.push(state.u.clone());
        }
    }
    Ok(ChainOutput {
        samples,
        acceptance_rate: state.acceptance_rate(),
        sigma_v: sigma,
    })
}

/// Per-node arithmetic mean over retained samples.
pub fn posterior_means(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Usage("no retained samples".into()))?;
    let mut mean = vec![0.0; first.len()];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    let k = samples.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    Ok(mean)
}

/// One E-step for one network: chain, posterior means, rank adjustment.
pub fn estep<G: Graphon + ?Sized>(
    graph: &Graph,
    graphon: &G,
    config: &GibbsConfig,
    init: &NodePositions,
) -> Result<(NodePositions, ChainOutput)> {
    let out = run_chain(graph, graphon, config, init)?;
    let means = posterior_means(&out.samples)?;
    Ok((rank_adjust(&means), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{GridGraphon, Interpolation, SplineGraphon};

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn constant_graphon_conditional() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (3, 4)]).unwrap();
        let c = 0.3f64;
        let w = GridGraphon::constant(c).unwrap();
        let pos = [0.1, 0.2, 0.3, 0.4, 0.5];
        let expect = 2.0 * c.ln() + 2.0 * (1.0 - c).ln();
        for &u in &[0.05, 0.5, 0.99] {
            let v = full_conditional_logdensity(&w, &g, &pos, 0, u);
            assert!((v - expect).abs() < 1e-12);
        }
        let half = GridGraphon::constant(0.5).unwrap();
        let v = full_conditional_logdensity(&half, &g, &pos, 4, 0.7);
        let iso = Graph::empty(5).unwrap();
        let w_iso = full_conditional_logdensity(&half, &iso, &pos, 2, 0.7);
        assert!((w_iso - 4.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((v - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn path_graph_hand_sum() {
        let w = GridGraphon::new(
            2,
            vec![0.2, 0.7, 0.7, 0.4],
            Interpolation::Bilinear,
        )
        .unwrap();
        let g = path3();
        let pos = [0.25, 0.5, 0.8];
        let u = 0.6;
        // node 1 is adjacent to 0 and 2
        let direct = w.eval_unchecked(u, 0.25).ln() + w.eval_unchecked(u, 0.8).ln();
        let got = full_conditional_logdensity(&w, &g, &pos, 1, u);
        assert!((got - direct).abs() < 1e-12);
        // node 0: edge to 1, non-edge to 2
        let direct0 = w.eval_unchecked(u, 0.5).ln() + (1.0 - w.eval_unchecked(u, 0.8)).ln();
        let got0 = full_conditional_logdensity(&w, &g, &pos, 0, u);
        assert!((got0 - direct0).abs() < 1e-12);
    }

    #[test]
    fn clipping_avoids_infinite_values() {
        let w = SplineGraphon::constant(3, 0.0).unwrap();
        let g = Graph::complete(3).unwrap();
        let v = full_conditional_logdensity(&w, &g, &[0.2, 0.5, 0.8], 0, 0.3);
        assert!(v.is_finite());
        assert!((v - 2.0 * PROB_EPS.ln()).abs() < 1e-12);
    }

    #[test]
    fn proposal_ratio_examples() {
        let (u, lr) = propose_with_increment(0.5, 0.0);
        assert_eq!(u, 0.5);
        assert!(lr.abs() < 1e-15);
        assert!((log_proposal_ratio(0.5, 0.1).exp() - 0.36).abs() < 1e-12);
        let a = log_proposal_ratio(0.3, 0.85);
        let b = log_proposal_ratio(0.85, 0.3);
        assert!((a + b).abs() < 1e-15);
        let mut rng = rng::rng_from_seed(1);
        for _ in 0..1000 {
            let (u, _) = propose(0.999, 5.0, &mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn accept_same_point_always() {
        let w = GridGraphon::reference_blocks();
        let g = path3();
        let mut pos = vec![0.2, 0.5, 0.8];
        let mut rng = rng::rng_from_seed(2);
        for _ in 0..100 {
            assert!(mh_accept(&w, &g, &mut pos, 1, 0.5, 0.0, &mut rng));
        }
    }

    /// Expected acceptance under a constant graphon,
    /// E_z[min{1, u*(1-u*)/(u(1-u))}], by Simpson quadrature over z.
    fn expected_acceptance(u: f64, sigma: f64) -> f64 {
        let n = 4000;
        let (a, b) = (-10.0 * sigma, 10.0 * sigma);
        let h = (b - a) / n as f64;
        let f = |z: f64| {
            let (_, lr) = propose_with_increment(u, z);
            let dens = (-0.5 * (z / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            lr.exp().min(1.0) * dens
        };
        let mut s = f(a) + f(b);
        for k in 1..n {
            let x = a + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn acceptance_matches_quadrature_under_constant_graphon() {
        let w = GridGraphon::constant(0.4).unwrap();
        let g = path3();
        let mut rng = rng::rng_from_seed(5);
        for &(u0, sigma) in &[(0.5, 1.0), (0.15, 0.7), (0.9, 2.0)] {
            let reps = 40_000;
            let mut acc = 0usize;
            for _ in 0..reps {
                let mut pos = vec![u0, 0.3, 0.6];
                let (us, lr) = propose(u0, sigma, &mut rng);
                if mh_accept(&w, &g, &mut pos, 0, us, lr, &mut rng) {
                    acc += 1;
                }
            }
            let expect = expected_acceptance(u0, sigma);
            let rate = acc as f64 / reps as f64;
            let se = (expect * (1.0 - expect) / reps as f64).sqrt();
            assert!((rate - expect).abs() < 4.0 * se, "u0={u0}: {rate} vs {expect}");
        }
    }

    #[test]
    fn chain_is_deterministic_and_valid() {
        let w = GridGraphon::reference_blocks();
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (2, 5)]).unwrap();
        let cfg = GibbsConfig { seed: 9, ..Default::default() };
        let init = NodePositions::grid(6);
        let a = run_chain(&g, &w, &cfg, &init).unwrap();
        let b = run_chain(&g, &w, &cfg, &init).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples.len(), cfg.n_keep);
        assert!(a.samples.iter().flatten().all(|&x| x > 0.0 && x < 1.0));
        assert!(run_chain(&g, &w, &cfg, &NodePositions::grid(5)).is_err());
        let bad = GibbsConfig { sigma_v: 0.0, ..cfg };
        assert!(run_chain(&g, &w, &bad, &init).is_err());
    }

    #[test]
    fn posterior_mean_examples() {
        assert!(posterior_means(&[]).is_err());
        assert_eq!(posterior_means(&[vec![0.3, 0.6]]).unwrap(), vec![0.3, 0.6]);
        let m = posterior_means(&[vec![0.2], vec![0.4]]).unwrap();
        assert!((m[0] - 0.3).abs() < 1e-15);
        let c = posterior_means(&vec![vec![0.7]; 10]).unwrap();
        assert!((c[0] - 0.7).abs() < 1e-15);
    }

    fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn constant_graphon_marginals_exchangeable() {
        let w = GridGraphon::constant(0.3).unwrap();
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let cfg = GibbsConfig {
            burn_in: 200,
            thinning: 5,
            n_keep: 4000,
            seed: 4,
            ..Default::default()
        };
        let out = run_chain(&g, &w, &cfg, &NodePositions::grid(4)).unwrap();
        let col = |k: usize| out.samples.iter().map(|s| s[k]).collect::<Vec<_>>();
        // Uniform stationary law; samples autocorrelated, so allow a wide band.
        let threshold = 1.63 * (2.0 / 4000.0f64).sqrt() * 2.5;
        for k in 1..4 {
            let d = ks_two_sample(&col(0), &col(k));
            assert!(d < threshold, "node {k}: KS {d}");
        }
    }

    #[test]
    fn detailed_balance_smoke() {
        // Constant graphon: a single coordinate's kernel is reversible w.r.t.
        // Uniform(0, 1). Compare transition counts between bins both ways.
        let w = GridGraphon::constant(0.5).unwrap();
        let g = path3();
        let mut rng = rng::rng_from_seed(12);
        let mut pos = vec![0.5, 0.5, 0.5];
        let bins = 5;
        let bin = |x: f64| ((x * bins as f64) as usize).min(bins - 1);
        let mut counts = vec![vec![0f64; bins]; bins];
        let steps = 400_000;
        for _ in 0..steps {
            let from = bin(pos[0]);
            let (us, lr) = propose(pos[0], 1.0, &mut rng);
            mh_accept(&w, &g, &mut pos, 0, us, lr, &mut rng);
            counts[from][bin(pos[0])] += 1.0;
        }
        for a in 0..bins {
            let occupancy: f64 = counts[a].iter().sum::<f64>() / steps as f64;
            assert!((occupancy - 0.2).abs() < 0.02, "bin {a} occupancy {occupancy}");
            for b in (a + 1)..bins {
                let (x, y) = (counts[a][b], counts[b][a]);
                let tol = 4.0 * (x + y).sqrt() + 1.0;
                assert!((x - y).abs() <= tol, "bins {a}->{b}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn adaptation_reaches_target_band() {
        let w = GridGraphon::reference_blocks();
        let pair = crate::simulate::simulate_pair(&w, &w, [80, 80], 3).unwrap();
        let cfg = GibbsConfig {
            burn_in: 300,
            n_keep: 50,
            seed: 1,
            ..Default::default()
        };
        let out = run_chain(&pair.graphs[0], &w, &cfg, &pair.positions[0]).unwrap();
        assert!(
            (0.25..=0.55).contains(&out.acceptance_rate),
            "acceptance {} at sigma {}",
            out.acceptance_rate,
            out.sigma_v
        );
    }
}
