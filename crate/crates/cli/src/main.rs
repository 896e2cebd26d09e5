//! Command-line driver: predicts, simulates, measures and compares the
//! cyclic structure of the four-strategy population game.

mod commands;
mod config;

use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_convention, ModelCode, OriginChoice, ProtocolCode, RunConfig};
use eigencycle::error::Result;

#[derive(Parser)]
#[command(
    name = "eigencycle",
    version,
    about = "Cyclic dynamic structure of a four-strategy population game",
    after_help = "Exit codes: 0 success, 2 invalid input or configuration, 1 runtime failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigen analysis per treatment and model: spectra, eigencycle sets,
    /// rotation axes.
    Theory(CommonArgs),
    /// Mean-field trajectories, population runs and surrogate sessions,
    /// each measured and logged.
    Simulate(CommonArgs),
    /// Validate an experiment-format session file and convert it to
    /// frequency trajectories.
    Ingest {
        /// Session CSV with header session_id,period,n1,n2,n3,n4.
        input: PathBuf,
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Measure angular momenta and the rotation axis of a trajectory or
    /// session file.
    Measure {
        /// Trajectory CSV or session CSV.
        input: PathBuf,
        /// Label for the measured row (defaults to the file's own tag).
        #[arg(long)]
        source: Option<String>,
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Correlation matrices, regressions and hypothesis tests over the
    /// collected theory and measurement rows.
    Compare(CommonArgs),
    /// Sample orbit projections and the straight-line-residual diagnostic
    /// of the (x2, x4) projection.
    Manifold(CommonArgs),
    /// Eigencycle sets over a grid of payoff parameters.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Payoff parameter; repeat for several treatments (default 0.25 and 4).
    #[arg(long = "a", value_name = "A")]
    a: Vec<f64>,

    /// Dynamics model: T1..T5, replicator, ms-replicator or logit.
    #[arg(long)]
    model: Vec<String>,

    /// Population protocol: S1..S5, pairwise-difference,
    /// positive-proportional or logit.
    #[arg(long)]
    protocol: Vec<String>,

    /// Noise level for a custom logit model or protocol.
    #[arg(long)]
    noise: Option<f64>,

    /// Integration steps for mean-field trajectories.
    #[arg(long)]
    steps: Option<usize>,

    /// Ticks for population runs.
    #[arg(long)]
    ticks: Option<usize>,

    /// Root seed; per-run seeds are derived from it and the run label.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of surrogate sessions per treatment.
    #[arg(long)]
    sessions: Option<usize>,

    /// Periods per surrogate session.
    #[arg(long)]
    periods: Option<usize>,

    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// How the logit noise enters the exponent: temperature or gain.
    #[arg(long = "logit-convention")]
    logit_convention: Option<String>,

    /// Measurement reference point: fixed-point or mean.
    #[arg(long)]
    origin: Option<String>,

    /// Flat key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Population-run configuration file using the reference protocol's row
    /// names (n-of-agents, decision-method, prob-revision, ...).
    #[arg(long = "abm-config")]
    abm_config: Option<PathBuf>,
}

impl CommonArgs {
    /// Builds the run configuration: defaults, then the config file, then
    /// explicit flags.
    fn build(&self, defaults: RunConfig) -> Result<RunConfig> {
        let mut cfg = defaults;
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if !self.a.is_empty() {
            cfg.treatments = self.a.clone();
        }
        if !self.model.is_empty() {
            cfg.models = self.model.iter().map(|s| ModelCode::parse(s)).collect::<Result<_>>()?;
        }
        if !self.protocol.is_empty() {
            cfg.protocols =
                self.protocol.iter().map(|s| ProtocolCode::parse(s)).collect::<Result<_>>()?;
        }
        if let Some(n) = self.noise {
            cfg.noise = n;
        }
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        if let Some(t) = self.ticks {
            cfg.ticks = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.sessions {
            cfg.sessions = s;
        }
        if let Some(p) = self.periods {
            cfg.periods = p;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(c) = &self.logit_convention {
            cfg.logit_convention = parse_convention(c)?;
        }
        if let Some(o) = &self.origin {
            cfg.origin = OriginChoice::parse(o)?;
        }
        Ok(cfg)
    }

    /// Whether any run-selection flag was given explicitly.
    fn has_selection(&self) -> bool {
        !self.model.is_empty()
            || !self.protocol.is_empty()
            || self.sessions.is_some()
            || self.abm_config.is_some()
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Theory(args) => {
            let cfg = args.build(RunConfig::default())?;
            commands::cmd_theory(&cfg)
        }
        Command::Simulate(args) => {
            // with no selection flags, run the reference protocol suite:
            // five population protocols plus the surrogate sessions
            let defaults = if args.has_selection() {
                RunConfig { models: Vec::new(), protocols: Vec::new(), sessions: 0, ..RunConfig::default() }
            } else {
                RunConfig { models: Vec::new(), ..RunConfig::default() }
            };
            let cfg = args.build(defaults)?;
            commands::cmd_simulate(&cfg, args.abm_config.as_deref())
        }
        Command::Ingest { input, args } => {
            let defaults = RunConfig { treatments: vec![0.25], ..RunConfig::default() };
            let cfg = args.build(defaults)?;
            commands::cmd_ingest(input, &cfg)
        }
        Command::Measure { input, source, args } => {
            let cfg = args.build(RunConfig::default())?;
            commands::cmd_measure(input, source.as_deref(), &cfg)
        }
        Command::Compare(args) => {
            let cfg = args.build(RunConfig::default())?;
            commands::cmd_compare(&cfg)
        }
        Command::Manifold(args) => {
            let cfg = args.build(RunConfig::default())?;
            commands::cmd_manifold(&cfg)
        }
        Command::Sweep(args) => {
            let cfg = args.build(RunConfig::default())?;
            commands::cmd_sweep(&cfg, !args.a.is_empty() || args.config.is_some())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = e.source();
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
