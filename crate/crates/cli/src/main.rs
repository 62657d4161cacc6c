//! `thermkin`: run relaxation protocols, spectra and self-checks, writing CSV
//! tables and a manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{resolve, Command, Keys};

#[derive(Parser)]
#[command(name = "thermkin", version, about = "Heating versus cooling of open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Three-temperature protocol (forward or backward)
    Protocol3(Keys),
    /// Two-temperature protocol
    Protocol2(Keys),
    /// Liouvillian spectra at the hot and cold bath temperatures
    Spectrum(Keys),
    /// Solve the equidistance condition
    Equidist(Keys),
    /// Small-offset infidelity sweep and quadratic fit
    Linres(Keys),
    /// Run the closed-form and invariant checks
    Validate {
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn init_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("THERMKIN_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("THERMKIN_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error[ConfigError]: {msg}");
        return ExitCode::from(2);
    }
    let (cmd, keys, validate_dir) = match cli.command {
        Sub::Protocol3(k) => (Command::Protocol3, k, None),
        Sub::Protocol2(k) => (Command::Protocol2, k, None),
        Sub::Spectrum(k) => (Command::Spectrum, k, None),
        Sub::Equidist(k) => (Command::Equidist, k, None),
        Sub::Linres(k) => (Command::Linres, k, None),
        Sub::Validate { out_dir } => (Command::Protocol3, Keys::default(), Some(out_dir)),
    };
    let result = match validate_dir {
        Some(dir) => commands::run(None, None, dir),
        None => keys
            .merged()
            .and_then(|m| resolve(cmd, m))
            .map_err(commands::CliError::from)
            .and_then(|cfg| commands::run(Some(cmd), Some(cfg), PathBuf::new())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
