//! `thouless-lab`: batch front-end for band spectra, transmittances, currents
//! and the weak-convergence study.

mod commands;
mod config;
mod error;
mod output;
mod selfcheck;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CurrentMode, Repetitions};
use crate::config::{Format, Run};
use crate::error::CliError;

/// Environment variable capping the worker thread count.
const THREADS_ENV: &str = "THOULESS_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "thouless-lab", version, about = "Transport through periodized tight-binding samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Number of sample repetitions.
    #[arg(long = "N", global = true)]
    n: Option<u64>,

    /// Crystalline limit N -> inf.
    #[arg(long, global = true)]
    inf: bool,

    /// Add r, vartheta, theta columns to `transmit`.
    #[arg(long, global = true)]
    diagnostics: bool,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Ensemble size for `selfcheck`.
    #[arg(long, global = true)]
    ensemble: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Band edges of the periodized sample.
    Bands,
    /// Transmittance on an energy grid (--N <int> or --inf).
    Transmit,
    /// Landauer-Büttiker currents (--N <int>) or crystalline-limit currents (--inf).
    Currents,
    /// Reflectionless (Thouless) currents.
    Thouless,
    /// Table of ∫T_N f against ∫T_inf f.
    Converge,
    /// Property battery on a seeded random ensemble.
    Selfcheck,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thouless-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}={value} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let run = cli.config.as_deref().map(Run::load).transpose()?;
    let need_run = || {
        run.as_ref()
            .ok_or_else(|| CliError::Usage("--config <path> is required".into()))
    };
    let out_path = cli.out.clone().or_else(|| {
        run.as_ref()
            .and_then(|r| r.raw.output.as_ref())
            .and_then(|o| o.path.clone())
    });
    let format = |default: Format| {
        cli.format
            .or_else(|| run.as_ref().and_then(|r| r.raw.output.as_ref()).and_then(|o| o.format))
            .unwrap_or(default)
    };

    let text = match cli.command {
        Command::Bands => commands::bands(need_run()?, format(Format::Csv))?,
        Command::Transmit => {
            let reps = Repetitions::from_flags(cli.n, cli.inf)?;
            commands::transmit(need_run()?, reps, cli.diagnostics, format(Format::Csv))?
        }
        Command::Currents => {
            let (mode, n) = match Repetitions::from_flags(cli.n, cli.inf)? {
                Repetitions::Finite(n) => (CurrentMode::Finite, Some(n)),
                Repetitions::Infinite => (CurrentMode::Crystalline, None),
            };
            commands::currents(need_run()?, mode, n, format(Format::Json))?
        }
        Command::Thouless => commands::currents(need_run()?, CurrentMode::Thouless, None, format(Format::Json))?,
        Command::Converge => commands::converge(need_run()?, format(Format::Csv))?,
        Command::Selfcheck => {
            let seed = cli
                .seed
                .or_else(|| run.as_ref().and_then(|r| r.raw.seed))
                .unwrap_or(selfcheck::DEFAULT_SEED);
            let size = cli.ensemble.unwrap_or(selfcheck::DEFAULT_ENSEMBLE);
            if size == 0 {
                return Err(CliError::Usage("--ensemble must be positive".into()));
            }
            let report = selfcheck::run(seed, size, run.as_ref());
            print!("{}", selfcheck::summary(&report));
            if let Some(path) = &out_path {
                output::emit(&output::json(&report)?, Some(path))?;
            }
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            return if failed == 0 { Ok(()) } else { Err(CliError::Check(failed)) };
        }
    };
    output::emit(&text, out_path.as_deref())
}
