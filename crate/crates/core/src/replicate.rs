//! Monte Carlo studies of the test: null calibration with true or estimated
//! positions, and power along the shrinkage alternative.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{self, EmConfig};
use crate::error::{Error, Result};
use crate::estep::GibbsConfig;
use crate::graphon::{AnyGraphon, GridGraphon};
use crate::mstep::MStepConfig;
use crate::rng::{self, stream};
use crate::simulate::{self, simulate_pair};
use crate::testing::{self, TestConfig, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    /// Both networks from the same graphon, tested at the true positions.
    NullOracle,
    /// Both networks from the same graphon, positions estimated by EM.
    NullEstimated,
    /// Network B from the shrunk graphon, tested at the true positions.
    PowerOracle,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::NullOracle => "null-oracle",
            Study::NullEstimated => "null-estimated",
            Study::PowerOracle => "power-oracle",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null-oracle" => Ok(Study::NullOracle),
            "null-estimated" => Ok(Study::NullEstimated),
            "power-oracle" => Ok(Study::PowerOracle),
            other => Err(Error::Usage(format!(
                "unknown study '{other}' (expected null-oracle, null-estimated or power-oracle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study: Study,
    pub reps: usize,
    /// Shrinkage levels; only the power study uses more than `[0]`.
    pub gammas: Vec<f64>,
    pub sizes: [usize; 2],
    pub graphon: AnyGraphon,
    pub test: TestConfig,
    pub em: EmConfig,
    pub gibbs: GibbsConfig,
    pub mstep: MStepConfig,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(study: Study) -> Self {
        let gammas = match study {
            Study::PowerOracle => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            _ => vec![0.0],
        };
        StudyConfig {
            study,
            reps: 100,
            gammas,
            sizes: [200, 300],
            graphon: AnyGraphon::Grid(GridGraphon::reference_blocks()),
            test: TestConfig::default(),
            em: EmConfig::default(),
            gibbs: GibbsConfig::default(),
            mstep: MStepConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.gammas.is_empty() {
            return Err(Error::Config("need at least one gamma".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::Config(format!("gamma {g} not in [0, 1]")));
        }
        if self.study != Study::PowerOracle && self.gammas.iter().any(|&g| g != 0.0) {
            return Err(Error::Config(format!("{} runs under the null; gamma must be 0", self.study)));
        }
        self.test.validate()?;
        if self.study == Study::NullEstimated {
            self.em.validate()?;
            self.gibbs.validate()?;
            self.mstep.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub study: Study,
    pub gamma: f64,
    pub replicate: usize,
    pub t: f64,
    pub cells_used: usize,
    pub p_asym: f64,
    pub p_sim: f64,
    pub reject_asym: bool,
    pub reject_sim: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub study: Study,
    pub gamma: f64,
    pub reps: usize,
    pub rejection_rate_asym: f64,
    pub rejection_rate_sim: f64,
    pub mean_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub rows: Vec<ReplicateRow>,
    pub summary: Vec<SummaryRow>,
}

/// One replicate at shrinkage level `gammas[gamma_idx]`, seeded from
/// `(seed, gamma_idx, r)`.
pub fn run_replicate(config: &StudyConfig, gamma_idx: usize, r: usize) -> Result<ReplicateRow> {
    let gamma = config.gammas[gamma_idx];
    let seed = rng::derive_seed(config.seed, &[stream::REPLICATE, gamma_idx as u64, r as u64]);
    let other = simulate::shrink_alternative(&config.graphon, gamma)?;
    let pair = simulate_pair(&config.graphon, &other, config.sizes, seed)?;
    let graphs = [&pair.graphs[0], &pair.graphs[1]];
    let test_config = TestConfig {
        seed: rng::derive_seed(seed, &[stream::NULL_SIM]),
        ..config.test.clone()
    };
    let report: TestReport = match config.study {
        Study::NullOracle | Study::PowerOracle => {
            testing::run_test(graphs, [&pair.positions[0], &pair.positions[1]], &test_config)?
        }
        Study::NullEstimated => {
            let em = EmConfig {
                seed: rng::derive_seed(seed, &[stream::RESTART]),
                ..config.em.clone()
            };
            em::multi_start(graphs, &em, &config.gibbs, &config.mstep, &test_config, None)?.test
        }
    };
    Ok(ReplicateRow {
        study: config.study,
        gamma,
        replicate: r,
        t: report.t,
        cells_used: report.cells_used,
        p_asym: report.p_asym,
        p_sim: report.p_sim,
        reject_asym: report.reject_asym,
        reject_sim: report.reject_sim,
    })
}

/// Rejection rates and mean statistic per gamma, in the order of `gammas`.
pub fn summarize(study: Study, gammas: &[f64], rows: &[ReplicateRow]) -> Vec<SummaryRow> {
    gammas
        .iter()
        .map(|&gamma| {
            let sel: Vec<&ReplicateRow> = rows.iter().filter(|r| r.gamma == gamma).collect();
            let n = sel.len().max(1) as f64;
            let rate = |f: fn(&ReplicateRow) -> bool| sel.iter().filter(|r| f(r)).count() as f64 / n;
            SummaryRow {
                study,
                gamma,
                reps: sel.len(),
                rejection_rate_asym: rate(|r| r.reject_asym),
                rejection_rate_sim: rate(|r| r.reject_sim),
                mean_t: sel.iter().map(|r| r.t).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Run every (gamma, replicate) pair in parallel. Rows come back ordered by
/// gamma, then replicate, regardless of scheduling.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.gammas.len())
        .flat_map(|g| (0..config.reps).map(move |r| (g, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(g, r)| {
            run_replicate(config, g, r)
                .map_err(|e| e.context(format!("replicate {r} at gamma {}", config.gammas[g])))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(config.study, &config.gammas, &rows);
    Ok(StudyResult { rows, summary })
}
