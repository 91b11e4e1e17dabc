//! Acceptance gate. Each test checks one criterion at its pinned tolerance
//! and prints a single `PASS`/`FAIL` line before asserting.
//!
//! Criteria 10 and 11 run for hours or need external data; they are ignored
//! by default:
//!
//! ```text
//! cargo test --release -p jointgraphon --test acceptance -- --ignored --nocapture
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use jointgraphon::cli;
use jointgraphon::estep::{run_chain, GibbsConfig};
use jointgraphon::graph::Graph;
use jointgraphon::graphon::{Graphon, GridGraphon};
use jointgraphon::io::write_edge_list;
use jointgraphon::mstep::{log_likelihood, penalty_matrix, score, select_lambda, MStepConfig};
use jointgraphon::positions::NodePositions;
use jointgraphon::replicate::{run_study, Study, StudyConfig};
use jointgraphon::report::Report;
use jointgraphon::rng::rng_from_seed;
use jointgraphon::simulate::{sample_graph, sample_positions, simulate_pair};
use jointgraphon::testing::{
    chi2_quantile, chi2_sf, empirical_quantile, hypergeom_moments, hypergeom_sample,
    rectangle_counts, simulate_null, test_statistic, RectanglePartition,
};
use rand::Rng;

fn verdict(criterion: u32, title: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:>2} {} {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({title}) failed: {detail}");
}

// Exact hypergeometric law by the ratio recurrence
// p(k+1)/p(k) = (m1-k)(d-k) / ((k+1)(m-m1-d+k+1)), normalized.
fn exact_pmf(m: u64, d: u64, m1: u64) -> (u64, Vec<f64>) {
    let lo = (d + m1).saturating_sub(m);
    let hi = d.min(m1);
    let mut w = vec![1.0f64];
    for k in lo..hi {
        let r = ((m1 - k) * (d - k)) as f64 / ((k + 1) * (m - m1 - d + k + 1)) as f64;
        let next = w.last().unwrap() * r;
        w.push(next);
    }
    let total: f64 = w.iter().sum();
    (lo, w.into_iter().map(|x| x / total).collect())
}

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |c, i| c * (n - i) as u128 / (i + 1) as u128)
}

#[test]
fn criterion_01_hypergeometric_oracle() {
    let mut worst = 0.0f64;
    for m in 0..=30u64 {
        for d in 0..=m {
            for m1 in 0..=m {
                let got = hypergeom_moments(m, d, m1).unwrap();
                if m == 0 {
                    assert_eq!(got, None);
                    continue;
                }
                let total = binom(m, d) as f64;
                let (mut e, mut e2) = (0.0, 0.0);
                for k in 0..=d.min(m1) {
                    let p = (binom(m1, k) * binom(m - m1, d - k)) as f64 / total;
                    e += k as f64 * p;
                    e2 += (k * k) as f64 * p;
                }
                let v = e2 - e * e;
                let (ge, gv) = got.unwrap();
                worst = worst.max((ge - e).abs()).max((gv - v).abs());
            }
        }
    }
    let moments_ok = worst < 1e-12;

    let draws = 100_000;
    let mut sampling = Vec::new();
    for (seed, (m, d, m1)) in [(30u64, 12u64, 17u64), (500, 120, 200), (4000, 300, 2500), (150_000, 40_000, 300)]
        .into_iter()
        .enumerate()
    {
        let (e, v) = hypergeom_moments(m, d, m1).unwrap().unwrap();
        let (lo, pmf) = exact_pmf(m, d, m1);
        let mu4: f64 = pmf.iter().enumerate().map(|(i, p)| p * (lo as f64 + i as f64 - e).powi(4)).sum();
        let mut rng = rng_from_seed(seed as u64 + 100);
        let xs: Vec<f64> = (0..draws)
            .map(|_| hypergeom_sample(m, d, m1, &mut rng).unwrap() as f64)
            .collect();
        let n = draws as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se_mean = (v / n).sqrt();
        let se_var = ((mu4 - v * v) / n).sqrt();
        let z_mean = (mean - e).abs() / se_mean;
        let z_var = (var - v).abs() / se_var;
        sampling.push((m, z_mean, z_var));
    }
    let sampling_ok = sampling.iter().all(|&(_, zm, zv)| zm < 3.0 && zv < 3.0);
    let detail = format!(
        "max moment error {worst:.2e} over m <= 30 (tol 1e-12); sampling |z| (mean, var) {}",
        sampling
            .iter()
            .map(|(m, zm, zv)| format!("m={m}: ({zm:.2}, {zv:.2})"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    verdict(1, "hypergeometric oracle", moments_ok && sampling_ok, &detail);
}

#[test]
fn criterion_02_chi_squared_numerics() {
    let q = chi2_quantile(0.95, 210.0);
    let sf = chi2_sf(1.3862944, 2.0);
    let q_ok = (q - 244.8).abs() <= 0.1;
    let sf_ok = (sf - 0.5).abs() <= 1e-9;
    let detail = format!(
        "chi2_quantile(0.95, 210) = {q:.6} (244.8 +/- 0.1: {}); chi2_sf(1.3862944, 2) = {sf:.12} \
         (0.5 +/- 1e-9: {}, |diff| = {:.2e}; exp(-1.3862944/2) = {:.12})",
        if q_ok { "ok" } else { "out" },
        if sf_ok { "ok" } else { "out" },
        (sf - 0.5).abs(),
        (-1.3862944f64 / 2.0).exp()
    );
    verdict(2, "chi-squared numerics", q_ok && sf_ok, &detail);
}

#[test]
fn criterion_03_asymptotic_vs_simulated_null() {
    let truth = GridGraphon::reference_blocks();
    let pair = simulate_pair(&truth, &truth, [200, 300], 2024).unwrap();
    let partition = RectanglePartition::new(20).unwrap();
    let counts = rectangle_counts(
        [&pair.graphs[0], &pair.graphs[1]],
        [&pair.positions[0], &pair.positions[1]],
        &partition,
    )
    .unwrap();
    let stat = test_statistic(&counts).unwrap();
    let null = simulate_null(&counts, 10_000, 7).unwrap();
    let q_sim = empirical_quantile(&null, 0.95);
    let q_asym = chi2_quantile(0.95, stat.cells_used as f64);
    let rel = (q_sim - q_asym).abs() / q_asym;
    let detail = format!(
        "simulated 95% quantile {q_sim:.2}, chi-squared({}) quantile {q_asym:.2}, relative gap {:.2}% (< 5%)",
        stat.cells_used,
        100.0 * rel
    );
    verdict(3, "asymptotic vs simulated null", rel < 0.05, &detail);
}

#[test]
fn criterion_04_null_calibration_oracle_positions() {
    let config = StudyConfig {
        reps: 1000,
        seed: 4,
        ..StudyConfig::new(Study::NullOracle)
    };
    let result = run_study(&config).unwrap();
    let s = &result.summary[0];
    let rate = s.rejection_rate_sim;
    let detail = format!(
        "rejection rate {rate:.4} over {} replicates with the simulated null (band [0.04, 0.09]); \
         chi-squared null {:.4}; mean T {:.1}",
        s.reps, s.rejection_rate_asym, s.mean_t
    );
    verdict(4, "null calibration", (0.04..=0.09).contains(&rate), &detail);
}

#[test]
fn criterion_05_power_monotonicity() {
    let config = StudyConfig {
        reps: 200,
        seed: 5,
        ..StudyConfig::new(Study::PowerOracle)
    };
    assert_eq!(config.gammas, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let result = run_study(&config).unwrap();
    let power: Vec<f64> = result.summary.iter().map(|s| s.rejection_rate_sim).collect();
    let drops: Vec<f64> = power.windows(2).filter(|w| w[1] < w[0]).map(|w| w[0] - w[1]).collect();
    let monotone = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.03);
    let gain = power[4] - power[0];
    let detail = format!(
        "power {:?} at gamma 0..1; inversions {:?} (at most one of <= 0.03); power(1) - power(0) = {gain:.3} (>= 0.5)",
        power.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>(),
        drops
    );
    verdict(5, "power monotonicity", monotone && gain >= 0.5, &detail);
}

#[test]
fn criterion_06_score_vs_finite_differences() {
    let mut rng = rng_from_seed(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let size = rng.random_range(2..=4);
        let graphs: Vec<Graph> = (0..2)
            .map(|_| {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.random::<f64>() < 0.4 {
                            edges.push((i, j));
                        }
                    }
                }
                Graph::from_edges(n, &edges).unwrap()
            })
            .collect();
        let positions: Vec<NodePositions> = (0..2)
            .map(|_| NodePositions::new((0..n).map(|_| rng.random_range(0.01..0.99)).collect()).unwrap())
            .collect();
        let g: Vec<&Graph> = graphs.iter().collect();
        let p: Vec<&NodePositions> = positions.iter().collect();
        let theta: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.15..0.85)).collect();
        let analytic = score(size, &theta, &g, &p).unwrap();
        let h = 1e-6;
        let numeric: Vec<f64> = (0..theta.len())
            .map(|k| {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[k] += h;
                down[k] -= h;
                (log_likelihood(size, &up, &g, &p).unwrap() - log_likelihood(size, &down, &g, &p).unwrap())
                    / (2.0 * h)
            })
            .collect();
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / norm.max(1e-12));
    }
    verdict(
        6,
        "score gradient check",
        worst < 1e-5,
        &format!("max relative error {worst:.2e} over 20 instances (< 1e-5)"),
    );
}

#[test]
fn criterion_07_constrained_fit_vs_grid_search() {
    const EPS: f64 = 1e-6;
    let mut rng = rng_from_seed(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(6..=10);
        let truth = GridGraphon::new(
            2,
            {
                let (a, b, c) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
                vec![a, b, b, c]
            },
            jointgraphon::graphon::Interpolation::Bilinear,
        )
        .unwrap();
        let pos = sample_positions(n, &mut rng).unwrap();
        let graph = sample_graph(&truth, &pos, &mut rng).unwrap();
        // Per ordered pair, w = t00 c00 + t01 c01 + t11 c11 with hat weights
        // (1 - u, u) on both axes.
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let (u, v) = (pos[i], pos[j]);
                    let c00 = (1.0 - u) * (1.0 - v);
                    let c01 = (1.0 - u) * v + u * (1.0 - v);
                    let c11 = u * v;
                    terms.push((c00, c01, c11, graph.has_edge(i, j)));
                }
            }
        }
        let loglik = |t00: f64, t01: f64, t11: f64| -> f64 {
            terms
                .iter()
                .map(|&(a, b, c, y)| {
                    let w = (t00 * a + t01 * b + t11 * c).clamp(EPS, 1.0 - EPS);
                    if y { w.ln() } else { (1.0 - w).ln() }
                })
                .sum()
        };
        let mut grid_best = f64::NEG_INFINITY;
        for a in 0..=100 {
            for b in 0..=100 {
                for c in 0..=100 {
                    grid_best = grid_best.max(loglik(a as f64 / 100.0, b as f64 / 100.0, c as f64 / 100.0));
                }
            }
        }
        let fit = select_lambda(
            &[&graph],
            &[&pos],
            &MStepConfig {
                basis_size: Some(2),
                lambda_grid: vec![0.0],
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let th = fit.graphon.theta();
        let fitted = loglik(th[0], th[1], th[3]);
        worst = worst.max((fitted - grid_best).abs());
    }
    verdict(
        7,
        "constrained fit vs exhaustive grid",
        worst < 0.02,
        &format!("max |loglik(fit) - loglik(grid)| = {worst:.4} over 10 instances (< 0.02)"),
    );
}

#[test]
fn criterion_08_penalty_structure() {
    let p2 = penalty_matrix(2).unwrap();
    let expected = [
        [2.0, -1.0, -1.0, 0.0],
        [-1.0, 2.0, 0.0, -1.0],
        [-1.0, 0.0, 2.0, -1.0],
        [0.0, -1.0, -1.0, 2.0],
    ];
    let exact = (0..4).all(|r| (0..4).all(|c| p2[(r, c)] == expected[r][c]));
    let mut max_null = 0.0f64;
    for size in 2..=30 {
        let p = penalty_matrix(size).unwrap();
        let ones = nalgebra::DVector::from_element(size * size, 1.0);
        max_null = max_null.max((p * ones).amax());
    }
    let truth = GridGraphon::reference_blocks();
    let pair = simulate_pair(&truth, &truth, [200, 300], 8).unwrap();
    let fit = select_lambda(
        &[&pair.graphs[0], &pair.graphs[1]],
        &[&pair.positions[0], &pair.positions[1]],
        &MStepConfig {
            lambda_grid: vec![1e8],
            ..Default::default()
        },
        None,
    )
    .unwrap();
    let df_ok = (0.95..=1.05).contains(&fit.df);
    let detail = format!(
        "P(2) exact: {exact}; max |P 1| for L <= 30: {max_null:.1e}; df at lambda 1e8 = {:.4} ([0.95, 1.05])",
        fit.df
    );
    verdict(8, "penalty structure", exact && max_null == 0.0 && df_ok, &detail);
}

struct ProductGraphon;

impl Graphon for ProductGraphon {
    fn eval_unchecked(&self, u: f64, v: f64) -> f64 {
        0.1 + 0.8 * u * v
    }
    fn mean(&self) -> f64 {
        0.3
    }
    fn shrink_toward_mean(&self, _gamma: f64) -> jointgraphon::error::Result<Self> {
        Ok(ProductGraphon)
    }
}

#[test]
fn criterion_09_gibbs_vs_grid_posterior() {
    let graphon = ProductGraphon;
    let graph = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
    let n = graph.n();

    // Posterior on the 40-point midpoint grid of (0, 1)^4 under uniform priors.
    let pts = 40;
    let grid: Vec<f64> = (0..pts).map(|k| (k as f64 + 0.5) / pts as f64).collect();
    let mut marginals = vec![vec![0.0f64; pts]; n];
    let mut idx = [0usize; 4];
    let total = pts.pow(4);
    let mut logs = Vec::with_capacity(total);
    for flat in 0..total {
        let mut r = flat;
        for slot in idx.iter_mut() {
            *slot = r % pts;
            r /= pts;
        }
        let mut lp = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let w = graphon.eval_unchecked(grid[idx[i]], grid[idx[j]]);
                lp += if graph.has_edge(i, j) { w.ln() } else { (1.0 - w).ln() };
            }
        }
        logs.push(lp);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (flat, lp) in logs.iter().enumerate() {
        let w = (lp - top).exp();
        z += w;
        let mut r = flat;
        for marginal in marginals.iter_mut() {
            marginal[r % pts] += w;
            r /= pts;
        }
    }
    marginals.iter_mut().for_each(|m| m.iter_mut().for_each(|x| *x /= z));
    // Piecewise-linear CDF through the cell boundaries.
    let cdf = |m: &[f64], x: f64| -> f64 {
        let pos = (x * pts as f64).clamp(0.0, pts as f64);
        let cell = (pos as usize).min(pts - 1);
        m[..cell].iter().sum::<f64>() + m[cell] * (pos - cell as f64)
    };

    let config = GibbsConfig {
        sigma_v: 1.0,
        burn_in: 2000,
        thinning: 10,
        n_keep: 10_000,
        adapt: true,
        seed: 9,
    };
    let chain = run_chain(&graph, &graphon, &config, &NodePositions::grid(n)).unwrap();
    assert_eq!(chain.samples.len(), 10_000);
    let mut ks = Vec::new();
    for i in 0..n {
        let mut xs: Vec<f64> = chain.samples.iter().map(|s| s[i]).collect();
        xs.sort_by(f64::total_cmp);
        let m = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = cdf(&marginals[i], x);
                ((k + 1) as f64 / m - f).max(f - k as f64 / m)
            })
            .fold(0.0, f64::max);
        ks.push(d);
    }
    let worst = ks.iter().cloned().fold(0.0, f64::max);
    verdict(
        9,
        "Gibbs marginals vs grid posterior",
        worst < 0.05,
        &format!(
            "KS distances {:?} at 10^4 retained samples (< 0.05); acceptance {:.2}",
            ks.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            chain.acceptance_rate
        ),
    );
}

fn write_networks(dir: &Path, graphs: &[Graph; 2]) -> (PathBuf, PathBuf) {
    let (a, b) = (dir.join("net_a.txt"), dir.join("net_b.txt"));
    write_edge_list(&graphs[0], fs::File::create(&a).unwrap()).unwrap();
    write_edge_list(&graphs[1], fs::File::create(&b).unwrap()).unwrap();
    (a, b)
}

#[test]
#[ignore = "hours of compute: 40 full comparisons with 10 restarts each"]
fn criterion_10_end_to_end_null() {
    let truth = GridGraphon::reference_blocks();
    let runs = 40;
    let mut accepted = 0;
    for r in 0..runs {
        let dir = tempfile::tempdir().unwrap();
        let pair = simulate_pair(&truth, &truth, [200, 300], 10_000 + r).unwrap();
        let (a, b) = write_networks(dir.path(), &pair.graphs);
        let out = dir.path().join("out");
        let code = cli::run([
            "jointgraphon", "compare",
            "--net-a", a.to_str().unwrap(),
            "--net-b", b.to_str().unwrap(),
            "--out-dir", out.to_str().unwrap(),
            "--restarts", "10", "--select", "pvalue",
            "--seed", &r.to_string(),
        ]);
        assert_eq!(code, 0);
        let report: Report =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        if !report.test.reject_sim {
            accepted += 1;
        }
        eprintln!("run {r}: p_sim {:.4}", report.test.p_sim);
    }
    let rate = accepted as f64 / runs as f64;
    verdict(
        10,
        "end-to-end null",
        rate >= 0.85,
        &format!("{accepted} of {runs} comparisons not rejected ({rate:.3}, >= 0.85)"),
    );
}

/// Directory with `asd.csv`, `td.csv` (group-level weighted connectivity)
/// and `td_half_1.csv`, `td_half_2.csv` (two disjoint control subgroups).
const BRAIN_DATA_ENV: &str = "JOINTGRAPHON_BRAIN_DATA";

#[test]
#[ignore = "needs the 116-node brain connectivity matrices"]
fn criterion_11_end_to_end_brain_networks() {
    let dir = std::env::var_os(BRAIN_DATA_ENV).map(PathBuf::from);
    let files = ["asd.csv", "td.csv", "td_half_1.csv", "td_half_2.csv"];
    let Some(dir) = dir.filter(|d| files.iter().all(|f| d.join(f).exists())) else {
        verdict(
            11,
            "end-to-end brain networks",
            false,
            &format!("set {BRAIN_DATA_ENV} to a directory holding {files:?}; no brain data is available"),
        );
        return;
    };
    let compare = |x: &str, y: &str, tag: &str| -> Report {
        let out = std::env::temp_dir().join(format!("jointgraphon-brain-{tag}"));
        let code = cli::run([
            "jointgraphon", "compare",
            "--net-a", dir.join(x).to_str().unwrap(),
            "--net-b", dir.join(y).to_str().unwrap(),
            "--format", "adjacency", "--threshold", "0.4",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert!(code == 0, "compare exited with {code}");
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
    };
    let groups = compare("asd.csv", "td.csv", "groups");
    let halves = compare("td_half_1.csv", "td_half_2.csv", "halves");
    let pass = groups.test.reject_sim && groups.test.p_sim < 0.05 && !halves.test.reject_sim;
    verdict(
        11,
        "end-to-end brain networks",
        pass,
        &format!(
            "ASD vs TD p_sim {:.4} (reject expected); TD halves p_sim {:.4} (no rejection expected)",
            groups.test.p_sim, halves.test.p_sim
        ),
    );
}

fn run_twice(args: &[&str], files: &[&str]) -> Vec<(String, bool)> {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut full: Vec<String> = vec!["jointgraphon".into()];
        full.extend(args.iter().map(|s| s.to_string()));
        full.push("--out-dir".into());
        full.push(d.path().to_str().unwrap().into());
        assert_eq!(cli::run(full), 0, "{args:?}");
    }
    files
        .iter()
        .map(|f| {
            let a = fs::read(dirs[0].path().join(f)).unwrap();
            let b = fs::read(dirs[1].path().join(f)).unwrap();
            (format!("{}/{f}", args[0]), a == b)
        })
        .collect()
}

#[test]
fn criterion_12_determinism() {
    let inputs = tempfile::tempdir().unwrap();
    let truth = GridGraphon::reference_blocks();
    let pair = simulate_pair(&truth, &truth, [60, 70], 12).unwrap();
    let (a, b) = write_networks(inputs.path(), &pair.graphs);
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());

    let mut checks = Vec::new();
    checks.extend(run_twice(
        &["simulate", "--n-a", "80", "--n-b", "90", "--gamma", "0.4", "--seed", "3"],
        &["net_a.txt", "net_b.txt", "positions_a.csv", "positions_b.csv", "truth.json"],
    ));
    checks.extend(run_twice(
        &[
            "compare", "--net-a", a, "--net-b", b, "--seed", "12", "--restarts", "3",
            "--max-em-iters", "3", "--n-sims", "500", "--burn-in", "20", "--n-keep", "10",
            "--with-diff", "--top-q", "10", "--surface-res", "21",
        ],
        &["report.json", "positions_a.csv", "positions_b.csv", "graphon.csv", "cells.csv", "diff_surface.csv"],
    ));
    checks.extend(run_twice(
        &[
            "replicate", "--study", "power-oracle", "--reps", "4", "--gammas", "0,0.5",
            "--n-a", "60", "--n-b", "70", "--n-sims", "300", "--seed", "1",
        ],
        &["replicates.csv", "summary.csv"],
    ));
    checks.extend(run_twice(
        &[
            "replicate", "--study", "null-estimated", "--reps", "2", "--n-a", "40", "--n-b", "50",
            "--n-sims", "200", "--restarts", "2", "--max-em-iters", "2", "--seed", "2",
        ],
        &["replicates.csv", "summary.csv"],
    ));
    let differing: Vec<&str> = checks.iter().filter(|(_, same)| !same).map(|(f, _)| f.as_str()).collect();
    verdict(
        12,
        "determinism",
        differing.is_empty(),
        &format!("{} artifacts compared across two runs each; differing: {differing:?}", checks.len()),
    );
}
