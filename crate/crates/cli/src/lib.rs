//! `gaborfio`: frame checks, decay scans, multiplier approximation sweeps and
//! the Gaussian dilation comparison, driven by a JSON config and written as
//! CSV tables plus a `report.json`.
//!
//! Exit codes: 0 success, 1 config error, 2 non-frame, 3 insufficient decay
//! range, 4 extraction-radius error.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult, Issue};

#[derive(Debug, Parser)]
#[command(
    name = "gaborfio",
    version,
    about = "Gabor multiplier approximation of Fourier integral operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "gaborfio-out")]
    pub out: PathBuf,

    /// Seed for random probes and symbols; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads.
    #[arg(long, global = true, env = "GABORFIO_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Frame bounds, tight and dual windows, Parseval residual.
    FrameCheck,
    /// Gabor-matrix decay away from the graph of the canonical map.
    DecayScan,
    /// Error of truncated multiplier expansions.
    Approximate,
    /// Closed-form against extracted symbols for the Gaussian dilation.
    DilationDemo,
    /// Frame bounds of the warped system and a density sweep.
    WarpFrame,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FrameCheck => "frame-check",
            Command::DecayScan => "decay-scan",
            Command::Approximate => "approximate",
            Command::DilationDemo => "dilation-demo",
            Command::WarpFrame => "warp-frame",
        }
    }
}

/// Runs one command and writes its outputs. A failure that still produced
/// a report (non-frame) writes the report before returning the error.
pub fn run(cli: &Cli) -> CliResult<commands::Run> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config", "a config file is required"))?;
    let cfg = RunConfig::load(path)?;
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    if threads == 0 {
        return Err(CliError::config("--threads", "must be at least 1"));
    }
    let ctx = commands::Context {
        command: cli.command.name().to_string(),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        threads,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    let run = pool.install(|| match cli.command {
        Command::FrameCheck => commands::frame_check(&cfg, &ctx),
        Command::DecayScan => commands::decay_scan(&cfg, &ctx),
        Command::Approximate => commands::approximate(&cfg, &ctx),
        Command::DilationDemo => commands::dilation_demo(&cfg, &ctx),
        Command::WarpFrame => commands::warp_frame(&cfg, &ctx),
    })?;
    output::write_outcome(&run.outcome, &cli.out)?;
    Ok(run)
}

/// Parses `args` and runs without printing errors. Help and version
/// requests print and succeed.
pub fn execute<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    match run(&cli)? {
        commands::Run {
            failure: Some(e), ..
        } => Err(e),
        _ => Ok(()),
    }
}

/// [`execute`], reporting errors on stderr; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match execute(args) {
        Ok(()) => 0,
        Err(CliError::Usage(text)) => {
            eprint!("{text}");
            1
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
