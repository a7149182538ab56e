//! `pinnflow`: train weighted physics-informed flow solvers, evaluate saved
//! checkpoints on prediction grids, and sweep loss weights or subdomain
//! counts into comparison tables.

mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use pinnflow_core::error::{Error, Result};
use pinnflow_core::physics::Variant;
use pinnflow_core::trainer::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pinnflow", version, about = "Weighted physics-informed solver for 2D incompressible flow", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train networks; writes checkpoints, loss history and a manifest
    Train {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate saved checkpoints over the prediction grid at snapshot times
    Predict {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Directory holding checkpoint_NNN.txt files from a train run
        #[arg(long)]
        checkpoints: PathBuf,
        /// Comma-separated snapshot times; defaults to uniform snapshots
        #[arg(long)]
        times: Option<String>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Train once per value along an axis and tabulate the metrics
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Axis to sweep: beta, gamma, delta or subdomains
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis
        #[arg(long)]
        values: String,
        /// Optional inner axis swept for every outer value
        #[arg(long, requires = "nested_values")]
        nested_axis: Option<String>,
        /// Comma-separated values for the inner axis
        #[arg(long, requires = "nested_axis")]
        nested_values: Option<String>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the sampled collocation points without training
    ExportPoints {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Source {
    /// Configuration file
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: rectangle-paper, rectangle-scaled, semicircle-paper
    /// or semicircle-scaled
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct Overrides {
    /// Variant: wpinn, wxpinn or wcpinn (presets default to wpinn)
    #[arg(long)]
    variant: Option<String>,
    /// Seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel path (PINNFLOW_THREADS is the fallback)
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate the loss with the parallel reduction
    #[arg(long)]
    parallel: bool,
    /// Force the sequential path; wins over --parallel
    #[arg(long)]
    deterministic: bool,
}

fn load_config(source: &Source, overrides: &Overrides) -> Result<ExperimentConfig> {
    let variant = overrides
        .variant
        .as_deref()
        .map(config::parse_variant)
        .transpose()?;
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let mut cfg = config::parse_config(&text)?;
            if let Some(variant) = variant {
                cfg.variant = variant;
            }
            cfg
        }
        (None, Some(name)) => config::preset(name, variant.unwrap_or(Variant::Wpinn))?,
        _ => {
            return Err(Error::Configuration(
                "one of --config or --preset is required".into(),
            ))
        }
    };
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if overrides.parallel {
        cfg.parallel = true;
    }
    if overrides.deterministic {
        cfg.parallel = false;
    }
    Ok(cfg)
}

fn init_threads(requested: Option<usize>) -> Result<()> {
    let count = match requested {
        Some(n) => Some(n),
        None => match std::env::var("PINNFLOW_THREADS") {
            Ok(text) => Some(text.parse().map_err(|_| {
                Error::Configuration(format!(
                    "PINNFLOW_THREADS must be an integer, got '{text}'"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(count) = count {
        if count == 0 {
            return Err(Error::Configuration("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global()
            .map_err(|e| Error::Configuration(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}

fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        out.push(piece.parse().map_err(|_| {
            Error::Configuration(format!("{what}: '{piece}' is not a number"))
        })?);
    }
    if out.is_empty() {
        return Err(Error::Configuration(format!("{what}: no values given")));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Train {
            source,
            overrides,
            out,
        } => {
            init_threads(overrides.threads)?;
            let cfg = load_config(&source, &overrides)?;
            commands::cmd_train(&cfg, &out)
        }
        Command::Predict {
            source,
            overrides,
            checkpoints,
            times,
            out,
        } => {
            init_threads(overrides.threads)?;
            let cfg = load_config(&source, &overrides)?;
            let times = times
                .as_deref()
                .map(|t| parse_float_list(t, "--times"))
                .transpose()?;
            commands::cmd_predict(&cfg, &checkpoints, times, &out)
        }
        Command::Sweep {
            source,
            overrides,
            axis,
            values,
            nested_axis,
            nested_values,
            out,
        } => {
            init_threads(overrides.threads)?;
            let cfg = load_config(&source, &overrides)?;
            let values = parse_float_list(&values, "--values")?;
            let nested = match (nested_axis.as_deref(), nested_values.as_deref()) {
                (Some(axis), Some(values)) => {
                    Some((axis, parse_float_list(values, "--nested-values")?))
                }
                _ => None,
            };
            commands::cmd_sweep(&cfg, &axis, &values, nested, &out)
        }
        Command::ExportPoints {
            source,
            overrides,
            out,
        } => {
            init_threads(overrides.threads)?;
            let cfg = load_config(&source, &overrides)?;
            commands::cmd_export_points(&cfg, &out)
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Configuration(_)
        | Error::Partition(_)
        | Error::InvalidArchitecture(_)
        | Error::EmptySample(_)
        | Error::CheckpointIncompatible(_)
        | Error::CheckpointParse { .. }
        | Error::DegenerateLoss(_)
        | Error::EmptyTarget
        | Error::InsufficientDerivativeOrder(_)
        | Error::OutOfDomain(..) => 2,
        Error::Diverged { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
