//! `optdiv`: solve, inspect and cross-check dividend problems for two
//! collaborating branches.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use optdiv::solver1d::AuxKind;
use optdiv::solver2d::SweepMode;

use commands::{Context, Failure};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "optdiv", version, about = "Optimal dividends for two collaborating branches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `out` from the config, then `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 lets rayon decide).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Sweep mode, overriding the config.
    #[arg(long, value_parser = ["jacobi", "inplace"])]
    mode: Option<String>,
    /// Random seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the two-dimensional problem and write value, policy and regions.
    Solve2d(Common),
    /// Solve a one-dimensional auxiliary problem.
    Solve1d {
        #[command(flatten)]
        common: Common,
        /// `wbar` or `merger`, overriding `solve1d.kind`.
        #[arg(long, value_parser = ["wbar", "merger"])]
        kind: Option<String>,
    },
    /// Monte Carlo estimate of the stored policy's value.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the event log of this path.
        #[arg(long)]
        trace: Option<u64>,
    },
    /// Run every consistency check against stored artifacts.
    Validate(Common),
    /// Compare the merged company with the two-branch value.
    MergerCompare {
        #[command(flatten)]
        common: Common,
        /// Merger cost, overriding `merger.cost`.
        #[arg(long)]
        cost: Option<f64>,
    },
}

fn context(common: &Common) -> Result<Context, Failure> {
    let started = Instant::now();
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(m) = &common.mode {
        cfg.mode = m.parse::<SweepMode>()?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    Ok(Context {
        cfg,
        config_path: common.config.clone(),
        out,
        threads: rayon::current_num_threads(),
        started,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve2d(c) => commands::solve2d(&context(&c)?),
        Command::Solve1d { common, kind } => {
            let ctx = context(&common)?;
            let kind = match kind.as_deref() {
                Some("wbar") => AuxKind::Wbar,
                Some(_) => AuxKind::Merger { cost: ctx.cfg.merger_cost },
                None => ctx.cfg.kind_1d,
            };
            commands::solve1d(&ctx, kind)
        }
        Command::Simulate { common, trace } => commands::simulate(&context(&common)?, trace),
        Command::Validate(c) => commands::validate(&context(&c)?),
        Command::MergerCompare { common, cost } => commands::merger(&context(&common)?, cost),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("optdiv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
