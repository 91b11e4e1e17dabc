//! Fit the joint graphon of two networks with the multi-start EM and print
//! the selected fit next to the truth.
//!
//! ```bash
//! cargo run --release --example fit_joint_graphon
//! ```

use jointgraphon::em::{multi_start, EmConfig};
use jointgraphon::estep::GibbsConfig;
use jointgraphon::graphon::{Graphon, GridGraphon};
use jointgraphon::mstep::MStepConfig;
use jointgraphon::simulate::simulate_pair;
use jointgraphon::testing::TestConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = GridGraphon::reference_blocks();
    let pair = simulate_pair(&truth, &truth, [150, 200], 11)?;
    let em = EmConfig {
        n_restarts: 3,
        max_em_iters: 10,
        seed: 4,
        ..Default::default()
    };
    let report = |r: usize, it: &jointgraphon::em::EmIteration| {
        eprintln!(
            "restart {r} iteration {}: lambda {:.2e}, df {:.1}, change {:.4}",
            it.iteration, it.lambda, it.df, it.position_change[0]
        )
    };
    let ms = multi_start(
        [&pair.graphs[0], &pair.graphs[1]],
        &em,
        &GibbsConfig::default(),
        &MStepConfig::default(),
        &TestConfig::default(),
        Some(&report),
    )?;

    let fit = &ms.best.fit;
    println!(
        "selected restart {} of {}: L = {}, lambda = {:.3e}, df = {:.2}, AICc = {:.1}",
        ms.selected,
        ms.restarts.len(),
        fit.graphon.size(),
        fit.lambda,
        fit.df,
        fit.aicc
    );
    println!("converged: {}", ms.best.trace.converged);
    println!("   u     v   fitted  truth");
    for &(u, v) in &[(0.1, 0.1), (0.5, 0.5), (0.9, 0.9), (0.1, 0.9), (0.5, 0.9)] {
        println!(
            "{u:5.2} {v:5.2}  {:.3}   {:.3}",
            fit.graphon.eval_unchecked(u, v),
            truth.eval_unchecked(u, v)
        );
    }
    println!("test on the selected alignment: T = {:.2}, p_sim = {:.4}", ms.test.t, ms.test.p_sim);
    Ok(())
}
