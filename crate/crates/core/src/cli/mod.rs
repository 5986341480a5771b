//! Command-line experiment runner. Configuration comes from an optional TOML
//! file; command-line flags (and `RTNWALK_*` environment variables for the
//! global ones) override individual keys.

pub mod config;
mod output;
mod runner;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, GraphKind, PoolKind};

#[derive(Debug, Parser)]
#[command(
    name = "rtnwalk",
    version,
    about = "Averaged quantum-walk dynamics, spatial search, and non-Markovianity sweeps"
)]
pub struct Cli {
    /// TOML experiment configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, env = "RTNWALK_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (overrides the config file).
    #[arg(long, global = true, env = "RTNWALK_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, env = "RTNWALK_JOBS", value_name = "K")]
    pub jobs: Option<usize>,

    /// Seed for every pseudo-random choice in the run.
    #[arg(long, global = true, env = "RTNWALK_SEED", value_name = "S")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by every subcommand, named after config keys.
#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Graph sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,

    /// Graph family.
    #[arg(long, value_enum)]
    pub kind: Option<GraphKind>,

    /// Target node index.
    #[arg(long)]
    pub target: Option<usize>,

    /// Fixed hopping rate; omit to calibrate per size.
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl GraphArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(n) = &self.n {
            cfg.graph.n = n.clone();
        }
        if let Some(kind) = self.kind {
            cfg.graph.kind = kind;
        }
        if let Some(target) = self.target {
            cfg.search.target = target;
        }
        if let Some(gamma) = self.gamma {
            cfg.search.gamma = Some(gamma);
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Switching rates, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,

    /// Coupling-noise amplitudes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<f64>>,
}

impl NoiseArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(mu) = &self.mu {
            cfg.noise.mu = mu.clone();
        }
        if let Some(nu) = &self.nu {
            cfg.noise.nu = nu.clone();
        }
    }
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Final time of the dynamics grid.
    #[arg(long)]
    pub t_max: Option<f64>,

    /// Time-grid points including t = 0.
    #[arg(long)]
    pub points: Option<usize>,
}

impl DynamicsArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        self.graph.apply(cfg);
        self.noise.apply(cfg);
        if let Some(t_max) = self.t_max {
            cfg.time.t_max = t_max;
        }
        if let Some(points) = self.points {
            cfg.time.points = points;
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Debug, Args)]
pub struct NmDivArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Largest divisibility interval scanned.
    #[arg(long)]
    pub tau_max: Option<f64>,

    /// Grid step for both interval coordinates.
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NmBlpArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Final time of the backflow integration.
    #[arg(long)]
    pub t_max: Option<f64>,

    /// Backflow integration step.
    #[arg(long)]
    pub dt: Option<f64>,

    /// Candidate pool for the pair search.
    #[arg(long, value_enum)]
    pub pool: Option<PoolKind>,

    /// Seeded random candidates added when pool = search.
    #[arg(long)]
    pub random_candidates: Option<usize>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,

    /// Sampled trajectories per grid point.
    #[arg(long)]
    pub trajectories: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Averaged target-population dynamics over the (n, mu, nu) grid.
    Dynamics(DynamicsArgs),
    /// Noiseless hopping-rate calibration and peak success per size.
    Search(SearchArgs),
    /// Divisibility-defect surfaces and their maxima.
    NmDiv(NmDivArgs),
    /// Trace-distance backflow series and totals.
    NmBlp(NmBlpArgs),
    /// Monte Carlo trajectory average mirroring `dynamics`.
    Mc(McArgs),
    /// Success probability plus both non-Markovianity measures per grid point.
    Sweep(SweepArgs),
}

impl Command {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        match self {
            Command::Dynamics(a) => a.apply(cfg),
            Command::Search(a) => a.graph.apply(cfg),
            Command::NmDiv(a) => {
                a.graph.apply(cfg);
                a.noise.apply(cfg);
                if let Some(tau_max) = a.tau_max {
                    cfg.divisibility.tau_max = tau_max;
                }
                if let Some(step) = a.step {
                    cfg.divisibility.step = step;
                }
            }
            Command::NmBlp(a) => {
                a.graph.apply(cfg);
                a.noise.apply(cfg);
                if let Some(t_max) = a.t_max {
                    cfg.blp.t_max = t_max;
                }
                if let Some(dt) = a.dt {
                    cfg.blp.dt = dt;
                }
                if let Some(pool) = a.pool {
                    cfg.blp.pool = pool;
                }
                if let Some(rc) = a.random_candidates {
                    cfg.blp.random_candidates = rc;
                }
            }
            Command::Mc(a) => {
                a.dynamics.apply(cfg);
                if let Some(trajectories) = a.trajectories {
                    cfg.mc.trajectories = trajectories;
                }
            }
            Command::Sweep(a) => {
                a.graph.apply(cfg);
                a.noise.apply(cfg);
            }
        }
    }
}

/// Resolve the configuration and dispatch the subcommand inside a worker
/// pool sized by `jobs`.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cli.command.apply(&mut cfg);
    cfg.validate()?;

    let dispatch = || match &cli.command {
        Command::Dynamics(_) => runner::dynamics(&cfg),
        Command::Search(_) => runner::run_search(&cfg),
        Command::NmDiv(_) => runner::nm_div(&cfg),
        Command::NmBlp(_) => runner::nm_blp(&cfg),
        Command::Mc(_) => runner::run_mc(&cfg),
        Command::Sweep(_) => runner::sweep(&cfg),
    };
    if cfg.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(dispatch)
    } else {
        dispatch()
    }
}
