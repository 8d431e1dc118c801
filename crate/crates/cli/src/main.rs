//! `rkhs-sgd` command-line interface.

/// `println!` that ignores a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "rkhs-sgd", version, about = "Projected SGD in a reproducing-kernel Hilbert space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override `sgd.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `sgd.steps`.
    #[arg(long)]
    steps: Option<usize>,
    /// Override `io.out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic regression dataset.
    GenData {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the exact minimizer and write it as an expansion.
    Exact {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run one SGD trajectory.
    Sgd {
        #[command(flatten)]
        run: RunArgs,
        /// Expansion CSV of the minimizer; the trajectory then records
        /// squared distances to it.
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
    /// Monte-Carlo convergence study with a tail slope fit.
    Study {
        #[command(flatten)]
        run: RunArgs,
        /// Override `study.trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (falls back to RKHS_SGD_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData {
            n,
            d,
            m,
            noise_sd,
            seed,
            out,
        } => commands::gen_data(n, d, m, noise_sd, seed, &out),
        Command::Exact { run } => commands::exact(&run),
        Command::Sgd { run, oracle } => commands::sgd(&run, oracle.as_deref()),
        Command::Study { run, trials, threads } => commands::study(&run, trials, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
