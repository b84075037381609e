//! `ccm`: build coding plans, run coded multiplications, verify recovery
//! thresholds, tabulate condition numbers and simulate stragglers.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use ccm_core::schemes::SCHEME_HELP;
use ccm_core::CcmError;
use clap::{Parser, Subcommand};

use crate::config::Format;

#[derive(Parser, Debug)]
#[command(name = "ccm", version, about = "Coded distributed matrix multiplication toolkit")]
#[command(after_help = scheme_help())]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Top-level seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path; overrides the config. Reports go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Encode, compute, decode and write the product (CMX1 plus a JSON sidecar).
    Multiply {
        /// Comma-separated workers to treat as failed, e.g. "0,3".
        #[arg(long, value_delimiter = ',')]
        simulate_stragglers: Option<Vec<usize>>,
    },
    /// Check that every pattern of the configured budget decodes.
    Verify,
    /// Worst-case condition number over the configured budget.
    Cond {
        /// Vandermonde rows (N, tau) = (15, 13), (15, 12), (30, 28).
        #[arg(long)]
        table1: bool,
    },
    /// Run the straggler simulator (single run, or a batch with `trials`).
    Simulate,
    /// Small end-to-end run of a 2x2 polynomial code on six workers.
    Demo,
}

fn scheme_help() -> String {
    let mut s = String::from("Scheme kinds (config field \"scheme\", selected by \"kind\"):\n");
    for (name, params) in SCHEME_HELP {
        s.push_str(&format!("  {name:<18} {params}\n"));
    }
    s.push_str("\nEnvironment: CCM_THREADS caps worker threads (0 = automatic).");
    s
}

fn report_error(kind: &str, message: &str) {
    let err = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{err}");
}

fn configure_threads() -> Result<(), CcmError> {
    let Ok(v) = std::env::var("CCM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CcmError::Config(format!("CCM_THREADS must be a non-negative integer, got {v:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CcmError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("UsageError", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    let run = configure_threads().and_then(|_| commands::run(&cli));
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::from(2)
        }
    }
}
