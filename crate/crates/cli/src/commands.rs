//! Subcommand implementations. Each command validates its inputs before
//! creating the output directory, so a rejected run leaves nothing behind.

use crate::config::serialize_config;
use crate::manifest::Manifest;
use pinnflow_core::error::{Error, Result};
use pinnflow_core::geometry::generate_collocation;
use pinnflow_core::net::NetworkParams;
use pinnflow_core::optim::Stop;
use pinnflow_core::report;
use pinnflow_core::trainer::{self, sweep, ExperimentConfig};
use std::fs;
use std::path::Path;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_DIVERGED: u8 = 3;

pub fn checkpoint_name(index: usize) -> String {
    format!("checkpoint_{index:03}.txt")
}

pub fn fields_name(index: usize) -> String {
    format!("fields_{index:03}.csv")
}

fn stop_reason(stop: &Stop) -> String {
    match stop {
        Stop::GradientNorm => "gradient norm below tolerance".into(),
        Stop::Plateau => "loss plateau".into(),
        Stop::IterationBudget => "iteration budget exhausted".into(),
        Stop::LineSearchStall => "line search stalled".into(),
        Stop::Diverged { iteration } => format!("diverged at iteration {iteration}"),
    }
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<u8> {
    let cfg = cfg.validate()?;
    let model = trainer::train(&cfg)?;

    fs::create_dir_all(out)?;
    let echo = serialize_config(&model.config);
    let mut manifest = Manifest::begin("train", cfg.seed, echo.clone());
    manifest.write_file(out, "config.txt", &echo)?;
    manifest.write_file(
        out,
        "loss_history.csv",
        &report::loss_history_csv(&model.history),
    )?;
    for (i, net) in model.networks.iter().enumerate() {
        let name = checkpoint_name(i);
        net.save_checkpoint(&out.join(&name))?;
        manifest.record(out, &name)?;
    }
    manifest.finalize(out)?;

    println!(
        "trained {} on {} subdomain(s): loss {:.6e} -> {:.6e}, {} iterations, {:.1}s, stop: {}",
        model.config.variant.name(),
        model.config.subdomains,
        model.initial_loss.total,
        model.final_loss.total,
        model.iterations,
        model.wall_seconds,
        stop_reason(&model.stop)
    );
    if model.diverged() {
        eprintln!("warning: training diverged; checkpoints hold the last finite iterate");
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_predict(
    cfg: &ExperimentConfig,
    checkpoints: &Path,
    times: Option<Vec<f64>>,
    out: &Path,
) -> Result<u8> {
    let cfg = cfg.validate()?;
    let mut nets = Vec::with_capacity(cfg.subdomains);
    for i in 0..cfg.subdomains {
        nets.push(NetworkParams::load_checkpoint(
            &checkpoints.join(checkpoint_name(i)),
        )?);
    }
    let model = trainer::rehydrate(&cfg, nets)?;

    let times = times.unwrap_or_else(|| trainer::default_snapshot_times(&cfg.domain));
    let t1 = cfg.domain.final_time();
    for &t in &times {
        if !(0.0..=t1).contains(&t) {
            return Err(Error::Configuration(format!(
                "snapshot time {t} outside [0, {t1}]"
            )));
        }
    }
    let grid = generate_collocation(&cfg.domain, &cfg.flow, &cfg.prediction_counts, cfg.seed)?;
    let groups = trainer::predict_fields(&model, &grid, &times)?;

    fs::create_dir_all(out)?;
    let echo = serialize_config(&model.config);
    let mut manifest = Manifest::begin("predict", cfg.seed, echo.clone());
    manifest.write_file(out, "config.txt", &echo)?;
    let mut index = String::from("snapshot,time,rows\n");
    for (k, rows) in groups.iter().enumerate() {
        manifest.write_file(out, &fields_name(k), &report::fields_csv(rows))?;
        index.push_str(&format!("{k},{},{}\n", times[k], rows.len()));
    }
    manifest.write_file(out, "snapshots.csv", &index)?;
    manifest.finalize(out)?;

    println!(
        "wrote {} snapshot(s) of {} rows each (model loss {:.6e})",
        groups.len(),
        groups.first().map_or(0, Vec::len),
        model.final_loss.total
    );
    Ok(EXIT_OK)
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    axis: &str,
    values: &[f64],
    nested: Option<(&str, Vec<f64>)>,
    out: &Path,
) -> Result<u8> {
    let cfg = cfg.validate()?;
    let axis = sweep::SweepAxis::parse(axis)?;
    let nested = match &nested {
        Some((name, vals)) => Some((sweep::SweepAxis::parse(name)?, vals.as_slice())),
        None => None,
    };
    let runs = sweep::run_sweep(&cfg, axis, values, nested)?;

    fs::create_dir_all(out)?;
    let echo = serialize_config(&cfg);
    let mut manifest = Manifest::begin("sweep", cfg.seed, echo.clone());
    manifest.write_file(out, "config.txt", &echo)?;
    let rows: Vec<report::SweepRow> = runs.iter().map(|r| r.row.clone()).collect();
    let table = report::sweep_text_table(&rows);
    manifest.write_file(out, "sweep.csv", &report::sweep_csv(&rows))?;
    manifest.write_file(out, "sweep.txt", &table)?;
    for (i, run) in runs.iter().enumerate() {
        manifest.write_file(
            out,
            &format!("run_{i:03}/loss_history.csv"),
            &report::loss_history_csv(&run.history),
        )?;
        manifest.write_file(
            out,
            &format!("run_{i:03}/config.txt"),
            &serialize_config(&run.config),
        )?;
    }
    manifest.finalize(out)?;

    print!("{table}");
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!("{ok}/{} runs converged", rows.len());
    if ok == 0 {
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}

pub fn cmd_export_points(cfg: &ExperimentConfig, out: &Path) -> Result<u8> {
    let cfg = cfg.validate()?;
    let training = generate_collocation(&cfg.domain, &cfg.flow, &cfg.counts, cfg.seed)?;
    let prediction =
        generate_collocation(&cfg.domain, &cfg.flow, &cfg.prediction_counts, cfg.seed)?;

    fs::create_dir_all(out)?;
    let echo = serialize_config(&cfg);
    let mut manifest = Manifest::begin("export-points", cfg.seed, echo.clone());
    manifest.write_file(out, "config.txt", &echo)?;
    manifest.write_file(out, "training_points.csv", &report::points_csv(&training))?;
    manifest.write_file(out, "prediction_points.csv", &report::points_csv(&prediction))?;
    manifest.finalize(out)?;

    println!(
        "exported {} training and {} prediction points",
        training.interior.len() + training.boundary.len() + training.initial.len(),
        prediction.interior.len() + prediction.boundary.len() + prediction.initial.len()
    );
    Ok(EXIT_OK)
}
