//! Parameter sweeps over loss weights or the subdomain count, producing the
//! rows of the metrics tables.

use super::{train, ExperimentConfig};
use crate::error::{Error, Result};
use crate::optim::IterRecord;
use crate::report::SweepRow;
use std::time::Instant;

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Beta,
    Gamma,
    Delta,
    Subdomains,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Gamma => "gamma",
            SweepAxis::Delta => "delta",
            SweepAxis::Subdomains => "subdomains",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "beta" => Ok(SweepAxis::Beta),
            "gamma" => Ok(SweepAxis::Gamma),
            "delta" => Ok(SweepAxis::Delta),
            "m" | "subdomains" => Ok(SweepAxis::Subdomains),
            other => Err(Error::Configuration(format!(
                "unknown sweep axis '{other}'; expected beta, gamma, delta or subdomains"
            ))),
        }
    }
}

/// One completed (or failed) sweep entry.
#[derive(Debug, Clone)]
pub struct SweepRun {
    /// Configuration the run was attempted with.
    pub config: ExperimentConfig,
    pub row: SweepRow,
    /// Loss history of the run; empty when the run failed outright.
    pub history: Vec<IterRecord>,
}

fn apply(axis: SweepAxis, value: f64, base: &ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    if !value.is_finite() {
        return Err(Error::Configuration(format!(
            "sweep value {value} for {} is not finite",
            axis.name()
        )));
    }
    match axis {
        SweepAxis::Beta => cfg.weights.beta = value,
        SweepAxis::Gamma => cfg.weights.gamma = value,
        SweepAxis::Delta => cfg.weights.delta = value,
        SweepAxis::Subdomains => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::Configuration(format!(
                    "subdomain count {value} must be a positive integer"
                )));
            }
            cfg.subdomains = value as usize;
        }
    }
    Ok(cfg)
}

fn run_one(cfg: ExperimentConfig) -> SweepRun {
    let started = Instant::now();
    match train(&cfg) {
        Ok(model) => {
            let status = if model.diverged() {
                "diverged".to_string()
            } else if !model.final_loss.total.is_finite() {
                "failed: non-finite final loss".to_string()
            } else {
                "ok".to_string()
            };
            SweepRun {
                row: SweepRow {
                    subdomains: model.config.subdomains,
                    beta: model.config.weights.beta,
                    gamma: model.config.weights.gamma,
                    delta: model.config.weights.delta,
                    final_loss: model.final_loss.total,
                    comp_time_s: model.wall_seconds,
                    iterations: model.iterations,
                    status,
                },
                config: model.config,
                history: model.history,
            }
        }
        Err(e) => SweepRun {
            row: SweepRow {
                subdomains: cfg.subdomains,
                beta: cfg.weights.beta,
                gamma: cfg.weights.gamma,
                delta: cfg.weights.delta,
                final_loss: f64::NAN,
                comp_time_s: started.elapsed().as_secs_f64(),
                iterations: 0,
                status: format!("failed: {e}"),
            },
            config: cfg,
            history: Vec::new(),
        },
    }
}

/// Trains one model per value of `axis`, optionally crossed with a nested
/// axis (outer-major order). All runs share the base seed, so rows differ
/// only through the swept parameters. Individual failures are recorded in
/// the row's status and the sweep continues.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    nested: Option<(SweepAxis, &[f64])>,
) -> Result<Vec<SweepRun>> {
    if values.is_empty() {
        return Err(Error::Configuration("sweep needs at least one value".into()));
    }
    if let Some((inner_axis, inner_values)) = nested {
        if inner_values.is_empty() {
            return Err(Error::Configuration(
                "nested sweep needs at least one value".into(),
            ));
        }
        if inner_axis == axis {
            return Err(Error::Configuration(format!(
                "nested axis duplicates the outer axis '{}'",
                axis.name()
            )));
        }
    }

    let mut runs = Vec::new();
    for &outer in values {
        let outer_cfg = match apply(axis, outer, base) {
            Ok(cfg) => cfg,
            Err(e) => {
                let mut run = run_failed_placeholder(base, &e);
                annotate_value(&mut run.row, axis, outer);
                runs.push(run);
                continue;
            }
        };
        match nested {
            None => runs.push(run_one(outer_cfg)),
            Some((inner_axis, inner_values)) => {
                for &inner in inner_values {
                    match apply(inner_axis, inner, &outer_cfg) {
                        Ok(cfg) => runs.push(run_one(cfg)),
                        Err(e) => {
                            let mut run = run_failed_placeholder(&outer_cfg, &e);
                            annotate_value(&mut run.row, inner_axis, inner);
                            runs.push(run);
                        }
                    }
                }
            }
        }
    }
    Ok(runs)
}

/// Failure row for a value that could not even be applied to the config.
fn run_failed_placeholder(base: &ExperimentConfig, err: &Error) -> SweepRun {
    SweepRun {
        row: SweepRow {
            subdomains: base.subdomains,
            beta: base.weights.beta,
            gamma: base.weights.gamma,
            delta: base.weights.delta,
            final_loss: f64::NAN,
            comp_time_s: 0.0,
            iterations: 0,
            status: format!("failed: {err}"),
        },
        config: base.clone(),
        history: Vec::new(),
    }
}

fn annotate_value(row: &mut SweepRow, axis: SweepAxis, value: f64) {
    match axis {
        SweepAxis::Beta => row.beta = value,
        SweepAxis::Gamma => row.gamma = value,
        SweepAxis::Delta => row.delta = value,
        SweepAxis::Subdomains => {
            if value >= 1.0 && value.fract() == 0.0 {
                row.subdomains = value as usize;
            }
        }
    }
}
