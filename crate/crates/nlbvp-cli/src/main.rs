mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nlbvp::error::ErrorClass;
use nlbvp::{NlError, Result};
use serde_json::json;

use config::RunConfig;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// Kernel normalization and localization assumption reports.
    Check,
    /// Solve one boundary-value problem.
    Solve,
    /// Run a δ sweep.
    Study,
    /// Green's identity residual under mesh refinement.
    Greens,
    /// Profile and localization constants.
    Constants,
}

/// Heterogeneously localized nonlocal boundary-value problems.
#[derive(Debug, Parser)]
#[command(name = "nlbvp", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    config: PathBuf,
    /// Override a config field, e.g. `--set problem.bc=neumann`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: config `output_dir`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &NlError) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Solver => 3,
        ErrorClass::Resolution => 4,
    }
}

fn init_threads(cfg: &RunConfig) -> Result<()> {
    let env = std::env::var("NLBVP_THREADS").ok();
    let n =
        match env {
            Some(s) => {
                Some(s.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                    NlError::Parameter(format!("NLBVP_THREADS must be a positive integer, got '{s}'"))
                })?)
            }
            None => cfg.threads,
        };
    if let Some(n) = n {
        // a second initialization only happens in tests and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    let cfg = RunConfig::load(&cli.config, &cli.set)?;
    init_threads(&cfg)?;
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    match cli.command {
        Command::Check => commands::check(&cfg, &out),
        Command::Solve => commands::solve(&cfg, &out),
        Command::Study => commands::study(&cfg, &out),
        Command::Greens => commands::greens(&cfg, &out),
        Command::Constants => commands::constants(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = json!({ "error": e.code(), "class": e.class(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
