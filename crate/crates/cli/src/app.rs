//! Command-line surface and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use odlqr::stationary::Freeze;

use crate::commands::{self, GainSource, Outcome};
use crate::error::{CliError, CliResult, ExitStatus};
use crate::grid::GridSpec;
use crate::input::{load_problem, parse_weight_scales, Builtin, LoadedProblem, WeightScales};
use crate::landscape;

#[derive(Debug, Parser)]
#[command(name = "odlqr", version, about = "Observer-based dynamic LQR analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file, or one of doyle-1d, doyle-1d-ys, doyle-2d, doyle-2d-ys.
    #[arg(long)]
    pub problem: String,
    /// Directory for the output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Weight scales Q_SCALE,R_SCALE for the doyle-2d built-ins.
    #[arg(long, value_parser = parse_weight_scales)]
    pub weights: Option<WeightScales>,
    /// Stationarity tolerance (scale-relative).
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FreezeArg {
    None,
    K,
    L,
}

impl From<FreezeArg> for Freeze {
    fn from(f: FreezeArg) -> Self {
        match f {
            FreezeArg::None => Freeze::None,
            FreezeArg::K => Freeze::K,
            FreezeArg::L => Freeze::L,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the standing assumptions on a problem.
    Validate(Common),
    /// Standard controller/observer pair from the two Riccati equations.
    Design(Common),
    /// Cost and exact gradients at a gain pair, with a finite-difference check.
    Grad {
        #[command(flatten)]
        common: Common,
        /// standard, stationary, or a JSON file {"K": [[...]], "L": [[...]]}.
        #[arg(long, default_value = "standard")]
        gains: GainSource,
    },
    /// Stationary pair of the joint problem.
    Stationary {
        #[command(flatten)]
        common: Common,
        /// Starting pair: standard, stationary, or a gain file.
        #[arg(long, default_value = "standard")]
        gains: GainSource,
        /// Hold one gain at its starting value.
        #[arg(long, value_enum, default_value_t = FreezeArg::None)]
        freeze: FreezeArg,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
    },
    /// Cost and gradient norms over a 2-D slice of K or L, as CSV.
    Landscape {
        #[command(flatten)]
        common: Common,
        /// GAIN[@I,J]=MIN:MAX:STEPS,MIN:MAX:STEPS, e.g. L=-5:5:51,-5:5:51.
        #[arg(long)]
        grid: String,
        /// Pair supplying the counterpart gain: standard, stationary, or a gain file.
        #[arg(long, default_value = "standard")]
        fixed: GainSource,
    },
    /// Monte-Carlo rollout estimate of the cost.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "standard")]
        gains: GainSource,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Rollout length (default: set by the closed-loop spectral radius).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Local gradient-dominance certificate at the stationary pair.
    Dominance {
        #[command(flatten)]
        common: Common,
        /// Spectral-norm bound on the closed loop (default: just above its value).
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rerun a reference experiment (doyle-1d or doyle-2d) against its targets.
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// Accepted for interface uniformity; the experiments are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Validate(c) | Command::Design(c) => c,
            Command::Grad { common, .. }
            | Command::Stationary { common, .. }
            | Command::Landscape { common, .. }
            | Command::Simulate { common, .. }
            | Command::Dominance { common, .. }
            | Command::Reproduce { common, .. } => common,
        }
    }
}

fn problem(common: &Common) -> CliResult<LoadedProblem> {
    load_problem(&common.problem, common.weights)
}

fn dispatch(cmd: &Command) -> CliResult<Outcome> {
    let common = cmd.common();
    let tol = common.tol;
    match cmd {
        Command::Validate(c) => commands::validate_cmd(&problem(c)?),
        Command::Design(c) => commands::design(&problem(c)?),
        Command::Grad { gains, .. } => commands::grad(&problem(common)?, gains, tol),
        Command::Stationary {
            gains,
            freeze,
            max_iterations,
            ..
        } => {
            let mut opts = commands::stationary_options(tol)?;
            opts.freeze = (*freeze).into();
            opts.max_iterations = *max_iterations;
            commands::stationary(&problem(common)?, gains, opts)
        }
        Command::Landscape { grid, fixed, .. } => {
            let grid = GridSpec::parse(grid)?;
            landscape::landscape(&problem(common)?, &grid, fixed, tol)
        }
        Command::Simulate {
            gains,
            samples,
            horizon,
            seed,
            ..
        } => commands::simulate(&problem(common)?, gains, *samples, *horizon, *seed, tol),
        Command::Dominance {
            gamma,
            samples,
            seed,
            ..
        } => commands::dominance(&problem(common)?, tol, *gamma, *samples, *seed),
        Command::Reproduce { .. } => {
            let builtin = Builtin::parse(&common.problem).ok_or_else(|| {
                CliError::input(format!(
                    "reproduce takes a built-in experiment (doyle-1d or doyle-2d), got '{}'",
                    common.problem
                ))
            })?;
            commands::reproduce(builtin.experiment, common.weights, tol)
        }
    }
}

/// Runs a parsed command inside a worker pool of the requested size.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.command.common().jobs {
        if jobs == 0 {
            return Err(CliError::input("--jobs must be at least 1"));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::input(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(&cli.command))
}

/// Writes the artifact to `--out` (or stdout) and returns the exit status.
pub fn emit(cli: &Cli, outcome: &Outcome) -> CliResult<ExitStatus> {
    let artifact = &outcome.artifact;
    match &cli.command.common().out {
        Some(dir) => {
            let io = |source| CliError::Io {
                path: dir.display().to_string(),
                source,
            };
            std::fs::create_dir_all(dir).map_err(io)?;
            let path = dir.join(&artifact.file_name);
            std::fs::write(&path, &artifact.contents).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(artifact.contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    Ok(outcome.status)
}

/// Full run: parse, execute, write, and map failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::InputError.code()
            } else {
                0
            };
        }
    };
    match run(&cli).and_then(|outcome| emit(&cli, &outcome)) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status().code()
        }
    }
}
