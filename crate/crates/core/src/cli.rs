//! Command-line front end: `simulate`, `compare` and `replicate`.
//!
//! Data goes to files in `--out-dir`, diagnostics to standard error through
//! `log`. `compare` settings resolve as flags, then the `--config` file, then
//! defaults.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::em::{self, EmConfig, EmIteration, RestartSelection};
use crate::error::{Error, Result};
use crate::estep::GibbsConfig;
use crate::graph::Graph;
use crate::graphon::{sample_surface, AnyGraphon, Graphon, GridGraphon};
use crate::io::{self, InputFormat};
use crate::microdiff;
use crate::mstep::{self, MStepConfig};
use crate::positions::NodePositions;
use crate::replicate::{self, Study, StudyConfig};
use crate::report::{self, EmSummary, FitSummary, PositionPair, Report, Timings};
use crate::rng::{self, stream};
use crate::simulate::{self, simulate_pair};
use crate::testing::TestConfig;

/// Exit status when `--exit-on-reject` is set and the test rejects.
pub const EXIT_REJECT: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "jointgraphon", version, about = "Joint graphon fit and two-sample test for networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a network pair from a graphon, optionally shrinking B's graphon.
    Simulate(SimulateArgs),
    /// Fit the joint graphon, test equivalence, optionally localize differences.
    Compare(Box<CompareArgs>),
    /// Run a Monte Carlo study of the test.
    Replicate(ReplicateArgs),
}

/// Number of intervals per axis: `auto` or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum KChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl KChoice {
    pub fn fixed(self) -> Option<usize> {
        match self {
            KChoice::Auto => None,
            KChoice::Fixed(k) => Some(k),
        }
    }
}

impl std::str::FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(KChoice::Fixed(k)),
            _ => Err(format!("expected 'auto' or a positive integer, got '{s}'")),
        }
    }
}

impl TryFrom<serde_json::Value> for KChoice {
    type Error = String;

    fn try_from(v: serde_json::Value) -> std::result::Result<Self, String> {
        match v {
            serde_json::Value::String(s) => s.parse(),
            serde_json::Value::Number(n) => n
                .as_u64()
                .filter(|&k| k > 0)
                .map(|k| KChoice::Fixed(k as usize))
                .ok_or_else(|| format!("K must be a positive integer, got {n}")),
            other => Err(format!("expected 'auto' or a positive integer, got {other}")),
        }
    }
}

impl From<KChoice> for serde_json::Value {
    fn from(k: KChoice) -> Self {
        match k {
            KChoice::Auto => "auto".into(),
            KChoice::Fixed(k) => k.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectArg {
    #[default]
    Pvalue,
    Aicc,
}

impl From<SelectArg> for RestartSelection {
    fn from(s: SelectArg) -> Self {
        match s {
            SelectArg::Pvalue => RestartSelection::HighestPvalue,
            SelectArg::Aicc => RestartSelection::LowestAicc,
        }
    }
}

fn parse_format(s: &str) -> std::result::Result<InputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct CompareArgs {
    /// First network.
    #[arg(long)]
    pub net_a: Option<PathBuf>,
    /// Second network.
    #[arg(long)]
    pub net_b: Option<PathBuf>,
    /// Input format: edges or adjacency.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<InputFormat>,
    /// Binarize weighted adjacency matrices with `entry > threshold`.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Intervals per axis of the rectangle partition: auto or an integer.
    #[arg(long)]
    pub k: Option<KChoice>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo replicates of the null distribution.
    #[arg(long)]
    pub n_sims: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Restart selection rule.
    #[arg(long, value_enum)]
    pub select: Option<SelectArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also localize microscopic differences.
    #[arg(long)]
    pub with_diff: bool,
    /// Exit with status 2 when the simulated-null test rejects.
    #[arg(long)]
    pub exit_on_reject: bool,
    /// Flat JSON file of settings keyed by flag name.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
    /// Hat basis functions per axis (default from the network sizes).
    #[arg(long)]
    pub basis_size: Option<usize>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_count: Option<usize>,
    #[arg(long)]
    pub max_em_iters: Option<usize>,
    #[arg(long)]
    pub position_tol: Option<f64>,
    #[arg(long)]
    pub sigma_v: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thinning: Option<usize>,
    #[arg(long)]
    pub n_keep: Option<usize>,
    /// Keep the proposal scale fixed during burn-in.
    #[arg(long)]
    pub no_adapt: bool,
    /// Minimum nodes per interval when K is auto.
    #[arg(long)]
    pub min_nodes: Option<usize>,
    /// Edges listed per network and direction in the difference report.
    #[arg(long)]
    pub top_q: Option<usize>,
    /// Grid points per axis of the surface CSVs.
    #[arg(long)]
    pub surface_res: Option<usize>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub net_a: Option<PathBuf>,
    pub net_b: Option<PathBuf>,
    pub format: Option<InputFormat>,
    pub threshold: Option<f64>,
    pub k: Option<KChoice>,
    pub alpha: Option<f64>,
    pub n_sims: Option<usize>,
    pub restarts: Option<usize>,
    pub select: Option<SelectArg>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub with_diff: Option<bool>,
    pub exit_on_reject: Option<bool>,
    pub timings: Option<bool>,
    pub basis_size: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_count: Option<usize>,
    pub max_em_iters: Option<usize>,
    pub position_tol: Option<f64>,
    pub sigma_v: Option<f64>,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub n_keep: Option<usize>,
    pub no_adapt: Option<bool>,
    pub min_nodes: Option<usize>,
    pub top_q: Option<usize>,
    pub surface_res: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display()))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved `compare` settings. Everything that can change the
/// results is echoed into the report; thread count, output location and the
/// timing switch are not.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareSettings {
    pub net_a: PathBuf,
    pub net_b: PathBuf,
    pub format: InputFormat,
    pub threshold: Option<f64>,
    pub k: KChoice,
    pub alpha: f64,
    pub n_sims: usize,
    pub restarts: usize,
    pub select: SelectArg,
    pub seed: u64,
    pub with_diff: bool,
    pub exit_on_reject: bool,
    pub basis_size: Option<usize>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub max_em_iters: usize,
    pub position_tol: Option<f64>,
    pub sigma_v: f64,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_keep: usize,
    pub adapt: bool,
    pub min_nodes: usize,
    pub top_q: usize,
    pub surface_res: usize,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub timings: bool,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_flag(flag: bool, file: Option<bool>) -> bool {
    flag || file.unwrap_or(false)
}

impl CompareSettings {
    pub fn resolve(args: &CompareArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let gibbs = GibbsConfig::default();
        let em = EmConfig::default();
        let test = TestConfig::default();
        let missing = |name: &str| Error::Usage(format!("--{name} is required (flag or config file)"));
        let settings = CompareSettings {
            net_a: args.net_a.clone().or(file.net_a).ok_or_else(|| missing("net-a"))?,
            net_b: args.net_b.clone().or(file.net_b).ok_or_else(|| missing("net-b"))?,
            format: pick(args.format, file.format, InputFormat::Edges),
            threshold: args.threshold.or(file.threshold),
            k: pick(args.k, file.k, KChoice::Auto),
            alpha: pick(args.alpha, file.alpha, test.alpha),
            n_sims: pick(args.n_sims, file.n_sims, test.n_sims),
            restarts: pick(args.restarts, file.restarts, em.n_restarts),
            select: pick(args.select, file.select, SelectArg::Pvalue),
            seed: pick(args.seed, file.seed, 0),
            with_diff: pick_flag(args.with_diff, file.with_diff),
            exit_on_reject: pick_flag(args.exit_on_reject, file.exit_on_reject),
            basis_size: args.basis_size.or(file.basis_size),
            lambda_min: pick(args.lambda_min, file.lambda_min, 1e-2),
            lambda_max: pick(args.lambda_max, file.lambda_max, 1e6),
            lambda_count: pick(args.lambda_count, file.lambda_count, 25),
            max_em_iters: pick(args.max_em_iters, file.max_em_iters, em.max_em_iters),
            position_tol: args.position_tol.or(file.position_tol),
            sigma_v: pick(args.sigma_v, file.sigma_v, gibbs.sigma_v),
            burn_in: pick(args.burn_in, file.burn_in, gibbs.burn_in),
            thinning: pick(args.thinning, file.thinning, gibbs.thinning),
            n_keep: pick(args.n_keep, file.n_keep, gibbs.n_keep),
            adapt: !pick_flag(args.no_adapt, file.no_adapt),
            min_nodes: pick(args.min_nodes, file.min_nodes, test.min_nodes_per_interval),
            top_q: pick(args.top_q, file.top_q, 200),
            surface_res: pick(args.surface_res, file.surface_res, 101),
            workers: args.workers.or(file.workers),
            out_dir: pick(args.out_dir.clone(), file.out_dir, PathBuf::from(".")),
            timings: pick_flag(args.timings, file.timings),
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_max >= self.lambda_min && self.lambda_count > 0) {
            return Err(Error::Config(format!(
                "lambda range [{}, {}] with {} points is invalid",
                self.lambda_min, self.lambda_max, self.lambda_count
            )));
        }
        if self.surface_res < 2 {
            return Err(Error::Config("surface-res must be at least 2".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.test_config().validate()?;
        self.em_config().validate()?;
        self.gibbs_config().validate()?;
        self.mstep_config().validate()
    }

    pub fn test_config(&self) -> TestConfig {
        TestConfig {
            k: self.k.fixed(),
            min_nodes_per_interval: self.min_nodes,
            alpha: self.alpha,
            n_sims: self.n_sims,
            seed: rng::derive_seed(self.seed, &[stream::NULL_SIM]),
        }
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            max_em_iters: self.max_em_iters,
            position_tol: self.position_tol,
            n_restarts: self.restarts,
            selection: self.select.into(),
            seed: self.seed,
        }
    }

    pub fn gibbs_config(&self) -> GibbsConfig {
        GibbsConfig {
            sigma_v: self.sigma_v,
            burn_in: self.burn_in,
            thinning: self.thinning,
            n_keep: self.n_keep,
            adapt: self.adapt,
            seed: self.seed,
        }
    }

    pub fn mstep_config(&self) -> MStepConfig {
        MStepConfig {
            basis_size: self.basis_size,
            lambda_grid: mstep::log_spaced(self.lambda_min, self.lambda_max, self.lambda_count),
            ..Default::default()
        }
    }
}

/// Everything `compare` produces before anything is written.
#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub report: Report,
    /// `(u, v, w)` of the joint fit.
    pub surface: Vec<(f64, f64, f64)>,
    /// `[u, v, w_a, w_b, diff]` of the separate fits.
    pub diff_surface: Option<Vec<[f64; 5]>>,
}

fn em_progress(restart: usize, it: &EmIteration) {
    log::debug!(
        "restart {restart} iteration {}: lambda {:.3e}, df {:.2}, AICc {:.2}, position change {:.4}/{:.4}",
        it.iteration,
        it.lambda,
        it.df,
        it.aicc,
        it.position_change[0],
        it.position_change[1]
    );
}

/// Fit, test and optionally localize differences for two loaded graphs.
pub fn compare(settings: &CompareSettings, graphs: [&Graph; 2]) -> Result<CompareOutput> {
    let start = Instant::now();
    let ms = em::multi_start(
        graphs,
        &settings.em_config(),
        &settings.gibbs_config(),
        &settings.mstep_config(),
        &settings.test_config(),
        Some(&em_progress),
    )?;
    let fit_secs = start.elapsed().as_secs_f64();
    for r in &ms.restarts {
        match &r.error {
            None => log::info!(
                "restart {}: AICc {:.2}, p_sim {}",
                r.restart,
                r.aicc.unwrap_or(f64::NAN),
                r.p_sim.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into())
            ),
            Some(e) => log::warn!("restart {} failed: {e}", r.restart),
        }
    }
    log::info!(
        "selected restart {}: T = {:.3} on {} cells, p_sim = {:.4}, p_asym = {:.4}",
        ms.selected,
        ms.test.t,
        ms.test.cells_used,
        ms.test.p_sim,
        ms.test.p_asym
    );

    let diff_start = Instant::now();
    let (diff_surface, diff) = if settings.with_diff {
        let (surface, diff) = microdiff::analyze(
            graphs,
            [&ms.best.positions[0], &ms.best.positions[1]],
            &settings.mstep_config(),
            settings.top_q,
        )?;
        (Some(surface.grid(settings.surface_res)), Some(diff))
    } else {
        (None, None)
    };
    let diff_secs = settings.with_diff.then(|| diff_start.elapsed().as_secs_f64());

    let timings = settings.timings.then(|| Timings {
        fit_and_test: fit_secs,
        diff: diff_secs,
        total: start.elapsed().as_secs_f64(),
    });
    let report = Report {
        version: report::REPORT_VERSION.to_string(),
        config: serde_json::to_value(settings)?,
        fit: FitSummary::from(&ms.best.fit),
        positions: PositionPair {
            a: ms.best.positions[0].as_slice().to_vec(),
            b: ms.best.positions[1].as_slice().to_vec(),
        },
        test: ms.test,
        em: EmSummary {
            selected_restart: ms.selected,
            restarts: ms.restarts,
            trace: ms.best.trace.clone(),
        },
        diff,
        timings,
    };
    let surface = sample_surface(&ms.best.fit.graphon, settings.surface_res);
    Ok(CompareOutput {
        report,
        surface,
        diff_surface,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::from(e).context(path.display()))
}

/// Write `report.json`, positions, surfaces and cell contributions.
pub fn write_compare_output(
    dir: &Path,
    graphs: [&Graph; 2],
    out: &CompareOutput,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display()))?;
    let json = out.report.to_json()?;
    report::validate_report(&serde_json::from_str(&json)?)?;
    fs::write(dir.join("report.json"), json)?;
    let pos = [&out.report.positions.a, &out.report.positions.b];
    for (g, name) in ["positions_a.csv", "positions_b.csv"].iter().enumerate() {
        let p = NodePositions::new(pos[g].clone())?;
        io::write_positions(graphs[g], &p, create(dir, name)?)?;
    }
    let rows: Vec<Vec<f64>> = out.surface.iter().map(|&(u, v, w)| vec![u, v, w]).collect();
    io::write_table(&["u", "v", "w"], &rows, create(dir, "graphon.csv")?)?;
    io::write_cells(&out.report.test.contributions, create(dir, "cells.csv")?)?;
    if let Some(grid) = &out.diff_surface {
        let rows: Vec<Vec<f64>> = grid.iter().map(|r| r.to_vec()).collect();
        io::write_table(&["u", "v", "w_a", "w_b", "diff"], &rows, create(dir, "diff_surface.csv")?)?;
    }
    Ok(())
}

/// Run `f` on a pool of `workers` threads, or on the global pool.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Returns the process exit status.
pub fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let settings = CompareSettings::resolve(args)?;
    let load = |p: &Path| io::read_graph(p, settings.format, settings.threshold);
    let ga = load(&settings.net_a)?;
    let gb = load(&settings.net_b)?;
    log::info!(
        "network A: {} nodes, {} edges; network B: {} nodes, {} edges",
        ga.n(),
        ga.edge_count(),
        gb.n(),
        gb.edge_count()
    );
    let out = with_workers(settings.workers, || compare(&settings, [&ga, &gb]))??;
    write_compare_output(&settings.out_dir, [&ga, &gb], &out)?;
    log::info!("wrote results to {}", settings.out_dir.display());
    let reject = out.report.test.reject_sim;
    Ok(if reject && settings.exit_on_reject { EXIT_REJECT } else { 0 })
}

#[derive(Debug, Clone, Args)]
pub struct GraphonArgs {
    /// reference, erdos-renyi, or a graphon JSON file.
    #[arg(long, default_value = "reference")]
    pub graphon: String,
    /// Edge probability of the erdos-renyi graphon.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
}

impl GraphonArgs {
    pub fn load(&self) -> Result<AnyGraphon> {
        match self.graphon.as_str() {
            "reference" => Ok(AnyGraphon::Grid(GridGraphon::reference_blocks())),
            "erdos-renyi" => Ok(AnyGraphon::Grid(GridGraphon::constant(self.density)?)),
            path => {
                let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub n_a: usize,
    #[arg(long, default_value_t = 300)]
    pub n_b: usize,
    /// Shrink network B's graphon toward its mean by this factor.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[command(flatten)]
    pub graphon: GraphonArgs,
    /// Output format: edges or adjacency.
    #[arg(long, value_parser = parse_format, default_value = "edges")]
    pub format: InputFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct Truth<'a> {
    sizes: [usize; 2],
    gamma: f64,
    seed: u64,
    graphon_a: &'a AnyGraphon,
    graphon_b: &'a AnyGraphon,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let ga = args.graphon.load()?;
    let gb = simulate::shrink_alternative(&ga, args.gamma)?;
    let pair = simulate_pair(&ga, &gb, [args.n_a, args.n_b], args.seed)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display()))?;
    for (g, tag) in ["a", "b"].iter().enumerate() {
        let graph = &pair.graphs[g];
        match args.format {
            InputFormat::Edges => io::write_edge_list(graph, create(dir, &format!("net_{tag}.txt"))?)?,
            InputFormat::Adjacency => io::write_adjacency(graph, create(dir, &format!("net_{tag}.csv"))?)?,
        }
        io::write_positions(graph, &pair.positions[g], create(dir, &format!("positions_{tag}.csv"))?)?;
        log::info!(
            "network {}: {} nodes, density {:.4}",
            tag.to_uppercase(),
            graph.n(),
            graph.density()
        );
    }
    let truth = Truth {
        sizes: [args.n_a, args.n_b],
        gamma: args.gamma,
        seed: args.seed,
        graphon_a: &ga,
        graphon_b: &gb,
    };
    let mut json = serde_json::to_string_pretty(&truth)?;
    json.push('\n');
    fs::write(dir.join("truth.json"), json)?;
    log::info!("graphon means: A {:.4}, B {:.4}", ga.mean(), gb.mean());
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ReplicateArgs {
    /// null-oracle, null-estimated or power-oracle.
    #[arg(long)]
    pub study: String,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Comma-separated shrinkage levels (power-oracle only).
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 200)]
    pub n_a: usize,
    #[arg(long, default_value_t = 300)]
    pub n_b: usize,
    #[command(flatten)]
    pub graphon: GraphonArgs,
    #[arg(long, default_value = "auto")]
    pub k: KChoice,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_sims: usize,
    #[arg(long, default_value_t = 10)]
    pub min_nodes: usize,
    /// EM restarts per replicate (null-estimated only).
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value = "pvalue")]
    pub select: SelectArg,
    #[arg(long, default_value_t = 25)]
    pub max_em_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

impl ReplicateArgs {
    pub fn study_config(&self) -> Result<StudyConfig> {
        let study: Study = self.study.parse()?;
        let base = StudyConfig::new(study);
        Ok(StudyConfig {
            reps: self.reps,
            gammas: self.gammas.clone().unwrap_or(base.gammas.clone()),
            sizes: [self.n_a, self.n_b],
            graphon: self.graphon.load()?,
            test: TestConfig {
                k: self.k.fixed(),
                min_nodes_per_interval: self.min_nodes,
                alpha: self.alpha,
                n_sims: self.n_sims,
                seed: 0,
            },
            em: EmConfig {
                max_em_iters: self.max_em_iters,
                n_restarts: self.restarts,
                selection: self.select.into(),
                ..Default::default()
            },
            seed: self.seed,
            ..base
        })
    }
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    for r in rows {
        w.serialize(r).map_err(|e| Error::input_nl(format!("{name}: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_replicate(args: &ReplicateArgs) -> Result<()> {
    let config = args.study_config()?;
    let result = with_workers(args.workers, || replicate::run_study(&config))??;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::from(e).context(args.out_dir.display()))?;
    write_rows(&args.out_dir, "replicates.csv", &result.rows)?;
    write_rows(&args.out_dir, "summary.csv", &result.summary)?;
    for s in &result.summary {
        log::info!(
            "{} gamma {}: rejection rate {:.4} (simulated null), {:.4} (asymptotic) over {} replicates",
            s.study,
            s.gamma,
            s.rejection_rate_sim,
            s.rejection_rate_asym,
            s.reps
        );
    }
    Ok(())
}

fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parse `args` (program name first), run the subcommand and return the
/// process exit status: 0 on success, 2 on a rejection with
/// `--exit-on-reject`, 1 on any error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(|_| 0),
        Command::Compare(a) => cmd_compare(a),
        Command::Replicate(a) => cmd_replicate(a).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            EXIT_ERROR
        }
    }
}
