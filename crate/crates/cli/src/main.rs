//! `fracbvp` command-line front end.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, EXIT_CONFIG, EXIT_FAIL};

#[derive(Parser)]
#[command(name = "fracbvp", version, about = "Two-sided variable-coefficient fractional diffusion solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON problem configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Solve even when the wellposedness verdict is "violated".
    #[arg(long, global = true)]
    force: bool,
    /// Seed for randomized verification inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, env = "FRACBVP_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the operator identity suite.
    Verify,
    /// Solve the configured problem and sample the solution.
    Solve,
    /// Build a coercivity counterexample for (β, θ).
    Counterexample {
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Evaluate the wellposedness indicator.
    Wellposed,
    /// Run a manufactured-solution convergence study.
    Converge,
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    if let Some(t) = cli.threads.filter(|&t| t > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let ctx = Context { out: cli.out.clone(), force: cli.force, seed: cli.seed };
    let loaded = match &cli.config {
        Some(p) => match commands::load(p) {
            Ok(l) => Some(l),
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(EXIT_CONFIG);
            }
        },
        None => None,
    };
    if !matches!(cli.command, Command::Counterexample { .. }) && loaded.is_none() {
        eprintln!("error: --config is required");
        return Ok(EXIT_CONFIG);
    }
    std::fs::create_dir_all(&ctx.out)?;
    match cli.command {
        Command::Verify => commands::verify(&ctx, loaded.as_ref().unwrap()),
        Command::Solve => commands::solve(&ctx, loaded.as_ref().unwrap()),
        Command::Wellposed => commands::wellposed(&ctx, loaded.as_ref().unwrap()),
        Command::Converge => commands::converge(&ctx, loaded.as_ref().unwrap()),
        Command::Counterexample { beta, theta } => {
            let beta = beta.or(loaded.as_ref().map(|l| l.config.beta));
            let theta = theta.or(loaded.as_ref().map(|l| l.config.theta));
            match (beta, theta) {
                (Some(b), Some(t)) => commands::counterexample(&ctx, loaded.as_ref(), b, t),
                _ => {
                    eprintln!("error: counterexample needs --beta and --theta or a config");
                    Ok(EXIT_CONFIG)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL as u8)
        }
    }
}
