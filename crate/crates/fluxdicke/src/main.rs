//! Thin command-line front end over [`fluxdicke::run`]: parse the flags,
//! read the config, hand off to the requested driver, print its summary,
//! and turn the convergence checks into the exit code.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};

use fluxdicke::config::RawConfig;
use fluxdicke::run::{
    cmd_anticross, cmd_fit, cmd_oracle, cmd_project, cmd_quantize, cmd_sweep, CmdReport,
    RunContext,
};

#[derive(Parser)]
#[command(
    name = "fluxdicke",
    version,
    about = "Spectra of two flux qubits ultrastrongly coupled to an LC resonator",
    long_about = "Config-driven spectral toolkit for two flux qubits ultrastrongly coupled \
                  to an LC resonator: bias sweeps of the transition lines, avoided-crossing \
                  location, bare-state projections, an exactly solvable zero-gap cross-check, \
                  staged parameter fits, and charge-basis circuit quantization.\n\n\
                  Every run writes CSV tables plus a fully resolved config echo into --out, \
                  each stamped with the digest of the config that produced it. The exit code \
                  is 0 only when all internal convergence checks pass."
)]
struct Cli {
    /// Sectioned `key = value` config file; all defaults apply when omitted
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,

    /// Directory for output files (created if missing)
    #[arg(long, value_name = "DIR", default_value = "out", global = true)]
    out: PathBuf,

    /// Worker threads for the parallel sweeps (default: all cores)
    #[arg(long, value_name = "N", global = true)]
    threads: Option<usize>,

    /// Seed override for synthetic-noise generation
    #[arg(long, value_name = "N", global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the transition lines over the bias grid
    Sweep,
    /// Locate and characterize the qubit-qubit avoided crossing
    Anticross,
    /// Decompose the low eigenstates over the bare product basis
    Project,
    /// Solve the zero-gap model exactly and cross-check the numerics
    Oracle,
    /// Fit device parameters to a peak table (from file, or synthesized)
    Fit,
    /// Quantize the qubit loops in the charge basis and reduce to two levels
    Quantize,
}

fn dispatch(cli: &Cli) -> anyhow::Result<CmdReport> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading config `{}`", path.display()))?,
        None => String::new(),
    };
    let cfg = RawConfig::parse(&text)?;
    let ctx = RunContext {
        out_dir: cli.out.clone(),
        seed: cli.seed,
    };
    let report = match cli.command {
        Cmd::Sweep => cmd_sweep(&cfg, &ctx),
        Cmd::Anticross => cmd_anticross(&cfg, &ctx),
        Cmd::Project => cmd_project(&cfg, &ctx),
        Cmd::Oracle => cmd_oracle(&cfg, &ctx),
        Cmd::Fit => cmd_fit(&cfg, &ctx),
        Cmd::Quantize => cmd_quantize(&cfg, &ctx),
    }?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(report) => {
            print!("{}", report.summary);
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more convergence checks failed");
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
