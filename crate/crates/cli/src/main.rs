//! `pdc-lab`: quantized-pump down-conversion experiments from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (and
//! failed verification).

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Axis, Format, ProcessKind, PumpKindArg, RunConfig, Scale};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pdc-lab", version, about = "Down-conversion with a quantized pump")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coupling constant, pump photon number, transit time and strength.
    Eta(EtaArgs),
    /// One exact run with series and weak-limit predictions.
    Simulate(RunArgs),
    /// A grid of runs along one axis.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Verify,
}

#[derive(Debug, Args)]
struct EtaArgs {
    /// Run config with a [physical] table, or a flat parameter file.
    /// Defaults to the bundled 404 nm BiBO parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Machine-readable output instead of the labeled record.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    process: Option<ProcessKind>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum)]
    pump: Option<PumpKindArg>,
    /// Coherent amplitude, `re` or `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    alpha: Option<[f64; 2]>,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Dimensionless interaction strength ηt; replaces a [physical] block.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    order: Option<u32>,
    /// Hard pump cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reserved; results are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    stop: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_enum)]
    scale: Option<Scale>,
}

fn parse_complex(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let number = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"));
    match parts.as_slice() {
        [re] => Ok([number(re)?, 0.0]),
        [re, im] => Ok([number(re)?, number(im)?]),
        _ => Err(format!("expected `re` or `re,im`, got `{text}`")),
    }
}

impl RunArgs {
    /// Config file (if any) with flags layered on top.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! overlay {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = Some(v); })*
            };
        }
        overlay!(
            process => process,
            n => n,
            order => order,
            seed => seed,
            pump => pump.kind,
            alpha => pump.alpha,
            nbar => pump.nbar,
            m => pump.m,
            cutoff => pump.cutoff,
            format => output.format,
            out => output.path,
        );
        if let Some(theta) = self.theta {
            c.theta = Some(theta);
            c.physical = None;
        }
        Ok(c)
    }
}

impl SweepArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = self.run.resolve()?;
        if let Some(v) = self.axis {
            c.sweep.axis = Some(v);
        }
        if let Some(v) = self.start {
            c.sweep.start = Some(v);
        }
        if let Some(v) = self.stop {
            c.sweep.stop = Some(v);
        }
        if let Some(v) = self.count {
            c.sweep.count = Some(v);
        }
        if let Some(v) = self.scale {
            c.sweep.scale = Some(v);
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eta(args) => {
            let params = commands::load_physical(args.config.as_deref())?;
            commands::eta(&params, args.format, args.out.as_deref())
        }
        Command::Simulate(args) => commands::simulate(&args.resolve()?),
        Command::Sweep(args) => commands::sweep(&args.resolve()?),
        Command::Verify => commands::verify(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdc-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
