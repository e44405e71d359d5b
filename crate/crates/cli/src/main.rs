use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nudge_lab::io::{
    cmd_analyze, cmd_assimilate, cmd_check_condition, cmd_simulate, cmd_sweep, configure_threads,
    exit_code, CommandOutput, ExperimentConfig,
};
use nudge_lab::{Error, Result};

/// Nudging data-assimilation experiments for Boussinesq and Navier-Stokes
/// flows.
///
/// Exit codes: 0 success, 1 other failure, 2 configuration error, 3
/// numerical divergence or instability, 4 stream/interpolant mismatch, 5
/// malformed CSV. `NUDGE_LAB_THREADS` caps the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "nudge-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (flat `key = value` text). Defaults apply
    /// when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the reference system and record its observations.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the nudged system against a twin reference or a stored stream.
    Assimilate {
        #[command(flatten)]
        common: Common,
        /// Use this nudging parameter even if the condition rejects it.
        #[arg(long)]
        override_mu: Option<f64>,
    },
    /// Evaluate the admissibility condition on a stored observation stream.
    CheckCondition {
        #[command(flatten)]
        common: Common,
        /// Stream file; overrides `stream` in the config.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Recompute fits, accumulators and energy budgets of stored series.
    Analyze {
        /// Series CSV files.
        paths: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the twin experiment over `sweep_values` in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out = common.out.clone().or_else(|| cfg.out.clone());
    Ok((cfg, out))
}

fn need_out(out: Option<PathBuf>) -> Result<PathBuf> {
    out.ok_or_else(|| Error::Config("no output directory: pass --out or set `out`".into()))
}

fn run(cli: Cli) -> Result<CommandOutput> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { common } => {
            let (cfg, out) = load(&common)?;
            cmd_simulate(&cfg, &need_out(out)?)
        }
        Command::Assimilate {
            common,
            override_mu,
        } => {
            let (cfg, out) = load(&common)?;
            cmd_assimilate(&cfg, &need_out(out)?, override_mu)
        }
        Command::CheckCondition { common, stream } => {
            let (cfg, out) = load(&common)?;
            cmd_check_condition(&cfg, stream.as_deref(), out.as_deref()).map(|(o, _)| o)
        }
        Command::Analyze { paths, out } => cmd_analyze(&paths, out.as_deref()).map(|(o, _)| o),
        Command::Sweep { common } => {
            let (cfg, out) = load(&common)?;
            cmd_sweep(&cfg, &need_out(out)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("{w}");
            }
            // A closed pipe (e.g. `| head`) is not an error of the command.
            let mut stdout = std::io::stdout().lock();
            for l in &out.lines {
                if writeln!(stdout, "{l}").is_err() {
                    break;
                }
            }
            if out.failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
