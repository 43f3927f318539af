use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use qsd_cli::args::{Cli, CliCommand};
use qsd_cli::{parse_config, run_experiment, ExperimentConfig};

fn build(command: CliCommand) -> Result<(ExperimentConfig, Option<usize>)> {
    Ok(match command {
        CliCommand::Simulate {
            config,
            seed,
            jobs,
            out,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut parsed =
                parse_config(&text).with_context(|| format!("in {}", config.display()))?;
            if let Some(seed) = seed {
                parsed.master_seed = seed;
            }
            if let Some(out) = out {
                parsed.output_dir = out;
            }
            (parsed, jobs)
        }
        CliCommand::FiniteLab {
            chain,
            cycles,
            replicas,
            seed,
            jobs,
            out,
        } => (
            ExperimentConfig::finite_lab(chain, cycles, replicas, seed, out),
            jobs,
        ),
        CliCommand::Verify {
            chain,
            nmax,
            tmax,
            out,
        } => (ExperimentConfig::verify(chain, nmax, tmax, out), None),
        CliCommand::Benchmark { name, grid, out } => {
            (ExperimentConfig::benchmark(&name, grid, out), None)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli.command).and_then(|(config, jobs)| run_experiment(&config, jobs));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            for (replica, message) in &outcome.failures {
                eprintln!("replica {replica} failed: {message}");
            }
            if outcome.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
