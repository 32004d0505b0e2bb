use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hamming_wells::cli::{
    cmd_grover_prior, cmd_ising_map, cmd_random_batch, cmd_solve, GroverPrior, IsingMap, RandomBatch, RowKind,
};

#[derive(Parser)]
#[command(name = "hamming-wells", version, about = "Spectral gaps of Hamming-symmetric adiabatic Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance configuration (solve) or experiment parameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Fix–Heiberger deflation tolerance in (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed for randomized experiments.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one instance over its s grid.
    Solve(Common),
    /// Minimum gaps of search with a Hamming-ball prior.
    GroverPrior(Common),
    /// Map a transverse-field Ising model onto point wells.
    IsingMap(Common),
    /// Compare tight-binding gaps with an oracle on random instances.
    RandomBatch(Common),
}

fn params_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())),
        None => Ok(String::new()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = match &cli.command {
        Command::Solve(c) | Command::GroverPrior(c) | Command::IsingMap(c) | Command::RandomBatch(c) => c,
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Solve(c) => {
            let Some(config) = &c.config else {
                bail!("solve needs --config");
            };
            let rows = cmd_solve(config, &c.out, c.epsilon)?;
            println!("rows={}", rows.len());
        }
        Command::GroverPrior(c) => {
            let mut p = GroverPrior::default();
            p.apply_text(&params_text(c.config.as_deref())?)?;
            if let Some(eps) = c.epsilon {
                p.epsilon = eps;
            }
            let report = cmd_grover_prior(&p, &c.out)?;
            for row in report.rows.iter().filter(|r| r.kind != RowKind::Prior) {
                let label = match row.kind {
                    RowKind::Baseline => "baseline",
                    _ => "aggregate",
                };
                println!("{label}_n{}={:e}", row.n, row.exact.gap);
            }
        }
        Command::IsingMap(c) => {
            let mut p = IsingMap::default();
            p.apply_text(&params_text(c.config.as_deref())?)?;
            let report = cmd_ising_map(&p, &c.out)?;
            print!("{}", report.summary());
            if !report.converged {
                eprintln!(
                    "calibration did not converge after {} iterations (residual {:e})",
                    report.iterations, report.calibration_residual
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::RandomBatch(c) => {
            let mut p = RandomBatch::default();
            p.apply_text(&params_text(c.config.as_deref())?)?;
            if let Some(eps) = c.epsilon {
                p.epsilon = eps;
            }
            if let Some(seed) = c.seed {
                p.seed = seed;
            }
            let s = cmd_random_batch(&p, &c.out)?;
            println!(
                "points={}\nresolved={}\nwithin={}\nfraction={}",
                s.points,
                s.resolved,
                s.within,
                s.fraction()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
