use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "riftort", version, about = "Rectified and c-rectified flow experiments")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a c-reflow experiment described by a config file.
    Reflow { config: PathBuf },
    /// Demonstrate the straight but non-optimal rotation coupling.
    Counterexample {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        n: usize,
    },
    /// Print exact transport optima for the configured pair.
    Oracle { config: PathBuf },
    /// Run the numerical property suite.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("riftort: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let out = std::env::var_os("RIFTORT_OUT").map(PathBuf::from);
    let code = match cli.command {
        Command::Reflow { config } => riftort::cli::run_reflow(&config, out.as_deref()),
        Command::Counterexample { seed, n } => riftort::cli::run_counterexample(seed, n),
        Command::Oracle { config } => riftort::cli::run_oracle(&config),
        Command::Selftest => riftort::cli::run_selftest(),
    };
    ExitCode::from(code as u8)
}
