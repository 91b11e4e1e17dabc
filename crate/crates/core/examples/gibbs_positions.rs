//! Recover latent positions with one Gibbs E-step under the true graphon and
//! compare them with the simulated truth.
//!
//! ```bash
//! cargo run --release --example gibbs_positions
//! ```

use jointgraphon::estep::{estep, GibbsConfig};
use jointgraphon::graphon::GridGraphon;
use jointgraphon::positions::NodePositions;
use jointgraphon::rng::rng_from_seed;
use jointgraphon::simulate::{sample_graph, sample_positions};

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let rank = |x: &[f64]| {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graphon = GridGraphon::reference_blocks();
    let mut rng = rng_from_seed(1);
    let truth = sample_positions(150, &mut rng)?;
    let graph = sample_graph(&graphon, &truth, &mut rng)?;

    let config = GibbsConfig {
        seed: 2,
        ..Default::default()
    };
    let (estimate, chain) = estep(&graph, &graphon, &config, &NodePositions::grid(150))?;

    println!("acceptance rate {:.3}, final sigma_v {:.3}", chain.acceptance_rate, chain.sigma_v);
    println!(
        "rank correlation with the true positions: {:.3}",
        spearman(estimate.as_slice(), truth.as_slice())
    );
    println!("mean |change| from the start: {:.4}", estimate.mean_abs_change(&NodePositions::grid(150)));
    Ok(())
}
