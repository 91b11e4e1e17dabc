//! Power of the test along the shrinkage alternative, at the true positions.
//!
//! ```bash
//! cargo run --release --example power_curve -- 50
//! ```

use jointgraphon::replicate::{run_study, Study, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let config = StudyConfig {
        reps,
        seed: 2,
        ..StudyConfig::new(Study::PowerOracle)
    };
    let result = run_study(&config)?;
    println!("gamma  power(sim)  power(asym)  mean T");
    for s in &result.summary {
        println!(
            "{:5.2}  {:10.3}  {:11.3}  {:6.1}",
            s.gamma, s.rejection_rate_sim, s.rejection_rate_asym, s.mean_t
        );
    }
    Ok(())
}
