//! The penalized spline fit at known positions: the AICc path over the
//! penalty grid and the selected graphon.
//!
//! ```bash
//! cargo run --release --example lambda_path
//! ```

use jointgraphon::graphon::{Graphon, GridGraphon};
use jointgraphon::mstep::{select_lambda, MStepConfig};
use jointgraphon::simulate::simulate_pair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = GridGraphon::reference_blocks();
    let pair = simulate_pair(&truth, &truth, [200, 300], 3)?;
    let fit = select_lambda(
        &[&pair.graphs[0], &pair.graphs[1]],
        &[&pair.positions[0], &pair.positions[1]],
        &MStepConfig::default(),
        None,
    )?;
    println!("   lambda        df        AICc");
    for p in &fit.path {
        let mark = if p.lambda == fit.lambda { " <" } else { "" };
        println!("{:9.3e}  {:8.2}  {:10.2}{mark}", p.lambda, p.df, p.aicc);
    }
    let mut sq = 0.0;
    let res = 50;
    for i in 0..res {
        for j in 0..res {
            let (u, v) = ((i as f64 + 0.5) / res as f64, (j as f64 + 0.5) / res as f64);
            sq += (fit.graphon.eval_unchecked(u, v) - truth.eval_unchecked(u, v)).powi(2);
        }
    }
    println!("L = {}, integrated squared error {:.5}", fit.graphon.size(), sq / (res * res) as f64);
    Ok(())
}
