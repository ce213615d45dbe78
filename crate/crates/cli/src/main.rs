//! `quditec` — command-line front end for the qudit erasure-code toolkit.
//!
//! Subcommands reproduce the toolkit's tables and figure data as long-format
//! CSV (or JSON reports for `simulate`), each carrying a run manifest header
//! sufficient to regenerate the output byte-for-byte. Exit codes: 0 success,
//! 2 usage error, 3 infeasible parameters, 4 internal error.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

#[derive(Parser)]
#[command(
    name = "quditec",
    version,
    about = "Qudit erasure codes, surface-code percolation and one-way repeater analysis",
    after_help = "Worker threads default to the number of cores; cap them with --threads or \
                  the RAYON_NUM_THREADS environment variable. Outputs are deterministic for a \
                  fixed (command, config, seed, version); pin SOURCE_DATE_EPOCH for \
                  byte-identical manifest headers."
)]
struct Cli {
    /// Cap the worker thread count (default: all cores / RAYON_NUM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Failure probabilities of size-matched polynomial and surface codes at
    /// 20% loss (analytic column + Monte Carlo column).
    Table1(Table1Cmd),
    /// Bits per photon and per mode for the three-qutrit and four-qubit codes.
    Fig1(Fig1Cmd),
    /// Erasure-success curves: polynomial codes (analytic) and surface codes
    /// (Monte Carlo).
    Fig3(Fig3Cmd),
    /// Key rate versus total distance for small codes and operation errors.
    Fig4(Fig4Cmd),
    /// Improvement-factor contours (parity-code cost over polynomial-code
    /// cost) against the loss-only baseline.
    Costs(CostsCmd),
    /// Single cost-coefficient optimization for both code families.
    Optimize(OptimizeCmd),
    /// State-vector simulation: erasure recovery for the small codes, or one
    /// teleportation-correction cycle for qpyc:k.
    Simulate(SimulateCmd),
    /// Bond-percolation success probability of surface-code erasure decoding.
    Percolate(PercolateCmd),
    /// Analytic repeater-chain secret-key rates.
    Keyrate(KeyrateCmd),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(4);
        }
    }
    let result = match cli.command {
        Command::Table1(args) => cmd_table1(args),
        Command::Fig1(args) => cmd_fig1(args),
        Command::Fig3(args) => cmd_fig3(args),
        Command::Fig4(args) => cmd_fig4(args),
        Command::Costs(args) => cmd_costs(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Percolate(args) => cmd_percolate(args),
        Command::Keyrate(args) => cmd_keyrate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
