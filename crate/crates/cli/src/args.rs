use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub const OUTPUT_ENV: &str = "QSD_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "qsd",
    version,
    about = "Quasi-stationary distributions by reinforced absorbed processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run the experiment described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for replicas (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides `output_dir`.
        #[arg(long, env = OUTPUT_ENV)]
        out: Option<PathBuf>,
    },
    /// Reinforced simulation of a finite absorbing chain.
    FiniteLab {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        cycles: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, env = OUTPUT_ENV, default_value = "qsd-out")]
        out: PathBuf,
    },
    /// Check the Green-operator identities and convergence bounds on a chain.
    Verify {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = crate::config::DEFAULT_N_MAX)]
        nmax: usize,
        /// Horizon of the flow checks (default: from the spectral gap).
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, env = OUTPUT_ENV, default_value = "qsd-out")]
        out: PathBuf,
    },
    /// Export a reference QSD and its finite-difference cross-check.
    Benchmark {
        #[arg(long, value_parser = ["bm-interval", "bm-disk"])]
        name: String,
        #[arg(long)]
        grid: usize,
        #[arg(long, env = OUTPUT_ENV, default_value = "qsd-out")]
        out: PathBuf,
    },
}
