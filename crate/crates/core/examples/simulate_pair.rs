//! Draw a network pair from the three-community reference graphon, with
//! network B taken from the shrinkage alternative.
//!
//! ```bash
//! cargo run --release --example simulate_pair -- 0.5
//! ```

use jointgraphon::graphon::{Graphon, GridGraphon};
use jointgraphon::simulate::{shrink_alternative, simulate_pair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let truth = GridGraphon::reference_blocks();
    let shrunk = shrink_alternative(&truth, gamma)?;
    let pair = simulate_pair(&truth, &shrunk, [200, 300], 7)?;

    println!("gamma = {gamma}, graphon mean = {:.4}", truth.mean());
    for (name, g) in ["A", "B"].iter().zip(&pair.graphs) {
        let degrees: Vec<usize> = (0..g.n()).map(|i| g.degree(i)).collect();
        let max = degrees.iter().max().copied().unwrap_or(0);
        println!(
            "network {name}: {} nodes, {} edges, density {:.4}, max degree {max}",
            g.n(),
            g.edge_count(),
            g.density()
        );
    }
    for (u, v) in [(0.1, 0.1), (0.1, 0.9), (0.5, 0.5), (0.9, 0.9)] {
        println!(
            "w({u}, {v}): truth {:.3}, shrunk {:.3}",
            truth.eval_unchecked(u, v),
            shrunk.eval_unchecked(u, v)
        );
    }
    Ok(())
}
