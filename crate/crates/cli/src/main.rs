mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

/// Sparse total-variation regularized learning in vector-valued integral
/// and neural RKBS.
#[derive(Parser, Debug)]
#[command(name = "vvrkbs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a sparse measure and write model.json and report.json to --out.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides solver.seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a fitted model.json at the x columns of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run every property suite and report the worst error per invariant.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Negative control: perturb the kernel pairings so verification fails.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Compare a grid-restricted fit with the grid oracle.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a hypernetwork model on z/y data.
    HyperFit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Embed a DeepONet as a hypernetwork model.
    Deeponet {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_VERIFY_FAILED: u8 = 4;

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("VVRKBS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("VVRKBS_THREADS must be a non-negative integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_threads()?;
    let line = match cli.command {
        Command::Fit { config, data, out, seed } => commands::cmd_fit(&config, &data, &out, seed)?,
        Command::Predict { model, data } => commands::cmd_predict(&model, &data)?,
        Command::Verify {
            config,
            trials,
            seed,
            inject_fault,
        } => {
            let outcome = commands::cmd_verify(config.as_deref(), trials, seed, inject_fault)?;
            for r in &outcome.reports {
                let mark = if r.passed { "ok  " } else { "FAIL" };
                eprintln!("{mark} {:<45} max_error {:.3e} (tol {:.0e})", r.name, r.max_error, r.tolerance);
            }
            print!("{}", outcome.json);
            return Ok(if outcome.passed { 0 } else { EXIT_VERIFY_FAILED });
        }
        Command::Oracle { config, data, seed } => commands::cmd_oracle(&config, &data, seed)?,
        Command::HyperFit { config, data, out, seed } => commands::cmd_hyper_fit(&config, &data, &out, seed)?,
        Command::Deeponet { config, out } => commands::cmd_deeponet(&config, &out)?,
    };
    print!("{line}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
