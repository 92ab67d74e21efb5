//! `bnftrace`: forward traces, recovery, classical normal forms and oracles
//! from the command line.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 mathematical failure.

mod commands;
mod config;
mod failure;
mod fixture;
mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigArgs;

#[derive(Parser)]
#[command(name = "bnftrace", version, about = "Quantum Birkhoff normal forms and their trace expansions")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace expansions tr U^k, k = 1..kmax, of a normal form.
    Forward {
        #[arg(long)]
        bnf: PathBuf,
        /// Action S(z) and Maslov indices; zero action when omitted.
        #[arg(long)]
        action: Option<PathBuf>,
    },
    /// Recovers a normal form with `n` degrees of freedom from trace data.
    Recover {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Forward then recover; succeeds iff the input comes back.
    Roundtrip {
        #[arg(long)]
        bnf: PathBuf,
        #[arg(long)]
        action: Option<PathBuf>,
    },
    /// Classical Birkhoff normal form of a Taylor map through ι^degree.
    ClassicalBnf {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        degree: u32,
    },
    /// Eigenvalue blocks of the linear part of a Taylor map.
    Classify {
        #[arg(long)]
        map: PathBuf,
        /// Search integer relations up to this order.
        #[arg(long, default_value_t = 10)]
        resonance_order: u32,
    },
    /// Desk-check values from the hyperbolic calculus.
    Oracle {
        #[command(subcommand)]
        which: oracle::OracleCommand,
    },
    /// Writes a reference normal form.
    Fixture {
        #[arg(value_enum)]
        kind: fixture::FixtureKind,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.config.validate() {
        Ok(c) => c,
        Err(f) => return f.report(),
    };
    let result = match cli.command {
        Command::Forward { bnf, action } => commands::forward(&cfg, &bnf, action.as_deref()),
        Command::Recover { traces, n } => commands::recover(&cfg, &traces, n),
        Command::Roundtrip { bnf, action } => commands::roundtrip(&cfg, &bnf, action.as_deref()),
        Command::ClassicalBnf { map, degree } => commands::classical_bnf(&cfg, &map, degree),
        Command::Classify { map, resonance_order } => commands::classify(&cfg, &map, resonance_order),
        Command::Oracle { which } => oracle::run(&cfg, &which),
        Command::Fixture { kind } => fixture::run(&cfg, kind),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
