//! `aerocomm` command-line front end.
//!
//! Exit status: 0 on success, 1 on invalid input or usage, 2 on runtime
//! failure. `AEROCOMM_THREADS` caps the worker threads (0 or unset = auto).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerocomm::io::{load_config, write_outputs};
use aerocomm::scenario::run;
use aerocomm::transport::max_throw_distance;
use aerocomm::Error;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

const THREADS_VAR: &str = "AEROCOMM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "aerocomm",
    version,
    about = "Airborne droplet transmission simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write the output bundle.
    Simulate {
        /// JSON scenario configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `run.output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Range of a frictionless horizontal throw.
    Dmax {
        /// Launch speed, m/s.
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        /// Launch height, m.
        #[arg(long, allow_negative_numbers = true)]
        h0: f64,
        /// Gravitational acceleration, m/s².
        #[arg(long, default_value_t = 9.81, allow_negative_numbers = true)]
        g: f64,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn thread_cap() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Validation(format!(
                "{THREADS_VAR} must be a non-negative integer, got `{v}`"
            ))
        }),
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if seed.is_some() {
        cfg.run.seed = seed;
    }
    cfg.run.require_seed()?;
    let out = out
        .or_else(|| cfg.run.output_dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .ok_or_else(|| {
            Failure::Validation("no output directory: pass --out or set run.output_dir".into())
        })?;
    let scenario = cfg.resolve()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap()?)
        .build()
        .map_err(|e| Failure::Runtime(format!("starting worker threads: {e}")))?;
    let result = pool.install(|| run(&scenario))?;
    let bundle = write_outputs(&result, &out, &cfg.analysis)?;

    let m = &bundle.summary.metrics;
    println!(
        "emitted {} deposited {} absorbed {} blocked {} airborne {}",
        m.emitted, m.deposited, m.absorbed, m.blocked, m.airborne_at_end
    );
    println!(
        "max range {:.3} m, infection range {:.3} m, newly infected {:?}",
        m.max_particle_range, m.infection_range, m.infected_receivers
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, out, seed),
        Command::Validate { config } => {
            load_config(&config)?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Dmax { v, h0, g } => {
            println!("{:.3}", max_throw_distance(v, h0, g)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
