//! Rejection rate of the test at the true positions when both networks share
//! one graphon.
//!
//! ```bash
//! cargo run --release --example null_calibration -- 200
//! ```

use jointgraphon::replicate::{run_study, Study, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100);
    let config = StudyConfig {
        reps,
        seed: 1,
        ..StudyConfig::new(Study::NullOracle)
    };
    let result = run_study(&config)?;
    let s = &result.summary[0];
    println!(
        "{} replicates: rejection rate {:.3} (simulated null), {:.3} (chi-squared), mean T {:.1}",
        s.reps, s.rejection_rate_sim, s.rejection_rate_asym, s.mean_t
    );
    let cells = result.rows[0].cells_used;
    println!("cells used {cells}, so E[T] is about {cells} under the null");
    Ok(())
}
