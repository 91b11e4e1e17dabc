//! The EM-type loop: M-step on the current positions, then one Gibbs E-step
//! per network with rank adjustment, until the positions settle. Several
//! independent restarts can be run and one of them selected.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estep::{self, GibbsConfig};
use crate::graph::Graph;
use crate::mstep::{self, FitResult, MStepConfig};
use crate::positions::NodePositions;
use crate::rng::{self, stream};
use crate::testing::{self, TestConfig, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RestartSelection {
    /// Keep the restart whose test yields the largest simulated p-value.
    #[default]
    HighestPvalue,
    /// Keep the restart with the smallest AICc.
    LowestAicc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_em_iters: usize,
    /// Convergence threshold on the mean absolute position change; `None`
    /// means `1 / (2 min(N1, N2))`.
    pub position_tol: Option<f64>,
    pub n_restarts: usize,
    pub selection: RestartSelection,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_em_iters: 25,
            position_tol: None,
            n_restarts: 10,
            selection: RestartSelection::HighestPvalue,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_em_iters == 0 || self.n_restarts == 0 {
            return Err(Error::Config("max_em_iters and n_restarts must be at least 1".into()));
        }
        if let Some(t) = self.position_tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("position_tol must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn resolved_position_tol(&self, sizes: [usize; 2]) -> f64 {
        self.position_tol
            .unwrap_or_else(|| 1.0 / (2.0 * sizes[0].min(sizes[1]) as f64))
    }
}

/// One EM iteration: the M-step summary and the E-step diagnostics that
/// followed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmIteration {
    pub iteration: usize,
    pub lambda: f64,
    pub loglik: f64,
    pub df: f64,
    pub aicc: f64,
    pub position_change: [f64; 2],
    pub acceptance_rate: [f64; 2],
    pub sigma_v: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EmTrace {
    pub iterations: Vec<EmIteration>,
    pub converged: bool,
}

/// Result of one EM run. `positions` come from the final E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub fit: FitResult,
    pub positions: [NodePositions; 2],
    pub trace: EmTrace,
}

/// Uninformative start: a uniformly random permutation of the grid
/// `{1/(n+1), …, n/(n+1)}`.
pub fn initialize_positions<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<NodePositions> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 nodes, got {n}")));
    }
    let mut u = NodePositions::grid(n).into_inner();
    u.shuffle(rng);
    NodePositions::new(u)
}

/// Per-iteration callback.
pub type Progress<'a> = &'a (dyn Fn(&EmIteration) + Sync);

/// Alternate M- and E-steps from random positions drawn from `seed`.
pub fn em_fit(
    graphs: [&Graph; 2],
    em: &EmConfig,
    gibbs: &GibbsConfig,
    mstep_config: &MStepConfig,
    seed: u64,
    progress: Option<Progress<'_>>,
) -> Result<EmFit> {
    em.validate()?;
    gibbs.validate()?;
    mstep_config.validate()?;
    let sizes = [graphs[0].n(), graphs[1].n()];
    let tol = em.resolved_position_tol(sizes);
    let mut positions = [
        initialize_positions(sizes[0], &mut rng::child_rng(seed, &[stream::INIT, 0]))?,
        initialize_positions(sizes[1], &mut rng::child_rng(seed, &[stream::INIT, 1]))?,
    ];
    let mut sigma = [gibbs.sigma_v; 2];
    let mut warm: Option<Vec<f64>> = None;
    let mut trace = EmTrace::default();
    let mut last_fit = None;

    for it in 1..=em.max_em_iters {
        let fit = mstep::select_lambda(
            &graphs,
            &[&positions[0], &positions[1]],
            mstep_config,
            warm.as_deref(),
        )
        .map_err(|e| e.context(format!("M-step of EM iteration {it}")))?;
        warm = Some(fit.graphon.folded());

        let chain_config = |g: usize| GibbsConfig {
            sigma_v: sigma[g],
            seed: rng::derive_seed(seed, &[stream::GIBBS, it as u64, g as u64]),
            ..gibbs.clone()
        };
        let (ca, cb) = (chain_config(0), chain_config(1));
        let (ra, rb) = rayon::join(
            || estep::estep(graphs[0], &fit.graphon, &ca, &positions[0]),
            || estep::estep(graphs[1], &fit.graphon, &cb, &positions[1]),
        );
        let ((pa, oa), (pb, ob)) = (ra?, rb?);
        let change = [
            pa.mean_abs_change(&positions[0]),
            pb.mean_abs_change(&positions[1]),
        ];
        sigma = [oa.sigma_v, ob.sigma_v];
        let record = EmIteration {
            iteration: it,
            lambda: fit.lambda,
            loglik: fit.loglik,
            df: fit.df,
            aicc: fit.aicc,
            position_change: change,
            acceptance_rate: [oa.acceptance_rate, ob.acceptance_rate],
            sigma_v: sigma,
        };
        if let Some(cb) = progress {
            cb(&record);
        }
        trace.iterations.push(record);
        positions = [pa, pb];
        last_fit = Some(fit);
        if change[0] < tol && change[1] < tol {
            trace.converged = true;
            break;
        }
    }
    Ok(EmFit {
        fit: last_fit.expect("at least one iteration"),
        positions,
        trace,
    })
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub aicc: Option<f64>,
    pub p_sim: Option<f64>,
    pub p_asym: Option<f64>,
    pub em_iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub selected: usize,
    pub best: EmFit,
    pub test: TestReport,
    pub restarts: Vec<RestartSummary>,
}

/// Run `em.n_restarts` independent EM fits (restart `r` seeded from
/// `(em.seed, r)`), test each when selecting by p-value, and return the
/// selected run with its test. Ties go to the lowest restart index.
pub fn multi_start(
    graphs: [&Graph; 2],
    em: &EmConfig,
    gibbs: &GibbsConfig,
    mstep_config: &MStepConfig,
    test_config: &TestConfig,
    progress: Option<&(dyn Fn(usize, &EmIteration) + Sync)>,
) -> Result<MultiStart> {
    em.validate()?;
    test_config.validate()?;
    let runs: Vec<Result<(EmFit, Option<TestReport>)>> = (0..em.n_restarts)
        .into_par_iter()
        .map(|r| {
            let seed = rng::derive_seed(em.seed, &[stream::RESTART, r as u64]);
            let hook = progress.map(|p| move |rec: &EmIteration| p(r, rec));
            let fit = em_fit(
                graphs,
                em,
                gibbs,
                mstep_config,
                seed,
                hook.as_ref().map(|h| h as Progress<'_>),
            )?;
            let test = match em.selection {
                RestartSelection::HighestPvalue => Some(testing::run_test(
                    graphs,
                    [&fit.positions[0], &fit.positions[1]],
                    test_config,
                )?),
                RestartSelection::LowestAicc => None,
            };
            Ok((fit, test))
        })
        .collect();

    let mut restarts = Vec::with_capacity(runs.len());
    let mut best: Option<(usize, f64)> = None;
    let mut first_error = None;
    for (r, run) in runs.iter().enumerate() {
        match run {
            Ok((fit, test)) => {
                let score = match em.selection {
                    RestartSelection::HighestPvalue => test.as_ref().map(|t| t.p_sim).unwrap_or(0.0),
                    RestartSelection::LowestAicc => -fit.fit.aicc,
                };
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((r, score));
                }
                restarts.push(RestartSummary {
                    restart: r,
                    aicc: Some(fit.fit.aicc),
                    p_sim: test.as_ref().map(|t| t.p_sim),
                    p_asym: test.as_ref().map(|t| t.p_asym),
                    em_iterations: Some(fit.trace.iterations.len()),
                    error: None,
                });
            }
            Err(e) => {
                log::warn!("restart {r} failed: {e}");
                restarts.push(RestartSummary {
                    restart: r,
                    aicc: None,
                    p_sim: None,
                    p_asym: None,
                    em_iterations: None,
                    error: Some(e.to_string()),
                });
                if first_error.is_none() {
                    first_error = Some(e.to_string());
                }
            }
        }
    }
    let Some((selected, _)) = best else {
        return Err(Error::AllRestartsFailed(
            em.n_restarts,
            Box::new(Error::Numerical(first_error.unwrap_or_default())),
        ));
    };
    let (best, test) = runs
        .into_iter()
        .nth(selected)
        .expect("selected index in range")
        .expect("selected run succeeded");
    let test = match test {
        Some(t) => t,
        None => testing::run_test(
            graphs,
            [&best.positions[0], &best.positions[1]],
            test_config,
        )?,
    };
    Ok(MultiStart {
        selected,
        best,
        test,
        restarts,
    })
}
