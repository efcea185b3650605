//! Command-line entry point: `train`, `eval`, `gradcheck` and `gen`
//! subcommands over the library.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/config error,
//! 3 runtime numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cmd_eval, cmd_gen, cmd_gradcheck, cmd_train, exit_code_for};
use config::parse_config_file;

#[derive(Parser)]
#[command(name = "gipa", version, about = "Sparse graph attention network trainer")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Train on a CSV dataset directory; writes checkpoint and metrics CSV.
    Train {
        /// Flat key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on the configured dataset (eval mode).
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Verify hand-written gradients against central finite differences on a
    /// random probe graph; prints a pass/fail table per parameter tensor.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        /// Probe graph size (at most 50).
        #[arg(long, default_value_t = 12)]
        nodes: usize,
        /// Undirected partners drawn per node.
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// Relative-error tolerance.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Probed entries per tensor (0 = every entry).
        #[arg(long, default_value_t = 12)]
        samples: usize,
    },
    /// Generate a synthetic planted-signal dataset in the CSV layout.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        d_node: usize,
        #[arg(long, default_value_t = 8)]
        d_edge: usize,
        #[arg(long, default_value_t = 6)]
        classes: usize,
    },
}

fn run(cli: Cli) -> Result<ExitCode, (String, u8)> {
    let load_cfg = |path: &PathBuf| parse_config_file(path).map_err(|e| (e, commands::EXIT_USAGE));
    let lift = |r: gipa::Result<ExitCode>| r.map_err(|e| (e.to_string(), exit_code_for(&e)));
    match &cli.command {
        Commands::Train { config, seed } => {
            let cfg = load_cfg(config)?;
            lift(cmd_train(&cfg, *seed))
        }
        Commands::Eval { config, checkpoint } => {
            let cfg = load_cfg(config)?;
            lift(cmd_eval(&cfg, checkpoint))
        }
        Commands::Gradcheck {
            config,
            nodes,
            degree,
            tolerance,
            samples,
        } => {
            let cfg = load_cfg(config)?;
            lift(cmd_gradcheck(&cfg, *nodes, *degree, *tolerance, *samples))
        }
        Commands::Gen {
            out,
            n,
            degree,
            seed,
            d_node,
            d_edge,
            classes,
        } => lift(cmd_gen(out, *n, *degree, *seed, *d_node, *d_edge, *classes)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err((message, code)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
