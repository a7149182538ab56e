//! Experiment orchestration: configuration presets, joint training of all
//! subdomain networks, interface exchange and global field assembly.
//!
//! All subdomain networks share one flat parameter vector and are updated
//! jointly; every loss evaluation sees a single consistent parameter
//! snapshot, so interface terms never mix stale and fresh predictions.

mod objective;
pub mod sweep;

use crate::error::{Error, Result};
use crate::geometry::{
    derive_seed, generate_collocation, partition_domain, CollocationCounts, CollocationSet,
    Domain, FlowConfig, RectangleDomain, SemiCircularDomain, SubdomainSpec,
};
use crate::net::{evaluate_with_derivatives, NetworkParams, P, PSI, S11, S12, S22};
use crate::optim::{self, AdamConfig, IterRecord, Objective, Stop};
use crate::physics::{interface_residuals, velocity_pressure, LossBreakdown, LossWeights, Variant};
use crate::report::FieldRow;
use objective::FusedObjective;
use std::time::Instant;

/// Two-phase optimizer budget: Adam warmup, then L-BFGS until convergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    pub adam_iters: usize,
    pub adam_lr: f64,
    /// Interior points per Adam step; `None` or an oversized value trains
    /// full-batch. L-BFGS always uses the full batch.
    pub batch_size: Option<usize>,
    pub lbfgs_max_iters: usize,
    pub grad_tolerance: f64,
    pub plateau_tolerance: f64,
    pub plateau_window: usize,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            adam_iters: 5000,
            adam_lr: 1e-3,
            batch_size: None,
            lbfgs_max_iters: 20000,
            grad_tolerance: 1e-8,
            plateau_tolerance: 1e-9,
            plateau_window: 10,
        }
    }
}

impl TrainingSchedule {
    fn optimizer_schedule(&self) -> optim::Schedule {
        optim::Schedule {
            adam_iters: self.adam_iters,
            adam: AdamConfig {
                learning_rate: self.adam_lr,
                ..AdamConfig::default()
            },
            lbfgs_max_iters: self.lbfgs_max_iters,
            grad_tolerance: self.grad_tolerance,
            plateau_tolerance: self.plateau_tolerance,
            plateau_window: self.plateau_window,
            ..optim::Schedule::default()
        }
    }
}

/// Complete description of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub flow: FlowConfig,
    pub variant: Variant,
    /// Subdomain count M. Forced to 1 for the single-network variant.
    pub subdomains: usize,
    pub weights: LossWeights,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub counts: CollocationCounts,
    pub prediction_counts: CollocationCounts,
    /// Collocation points per interface pair.
    pub interface_points: usize,
    pub schedule: TrainingSchedule,
    pub seed: u64,
    /// Distribute loss evaluation across threads. Results are bit-identical
    /// to the sequential path.
    pub parallel: bool,
}

impl ExperimentConfig {
    /// Straight channel at full published scale.
    pub fn rectangle_paper(variant: Variant) -> Self {
        ExperimentConfig {
            domain: Domain::Rectangle(RectangleDomain::default()),
            flow: FlowConfig::rectangle_defaults(),
            variant,
            subdomains: default_subdomains(variant),
            weights: LossWeights {
                beta: 1.0,
                gamma: 5.0,
                delta: 5.0,
            },
            hidden_layers: 7,
            hidden_width: 50,
            counts: CollocationCounts::rectangle_training(),
            prediction_counts: CollocationCounts::rectangle_prediction(),
            interface_points: 160,
            schedule: TrainingSchedule {
                adam_iters: 5000,
                adam_lr: 1e-3,
                batch_size: None,
                lbfgs_max_iters: 30000,
                ..TrainingSchedule::default()
            },
            seed: 0,
            parallel: false,
        }
    }

    /// Straight channel reduced to desktop scale: 2x20 network, 500 points,
    /// 2000 Adam + 2000 L-BFGS iterations.
    pub fn rectangle_scaled(variant: Variant) -> Self {
        ExperimentConfig {
            hidden_layers: 2,
            hidden_width: 20,
            counts: CollocationCounts {
                total: 500,
                boundary: 60,
                inout: 20,
            },
            interface_points: 32,
            schedule: TrainingSchedule {
                adam_iters: 2000,
                adam_lr: 1e-3,
                batch_size: None,
                lbfgs_max_iters: 2000,
                ..TrainingSchedule::default()
            },
            ..Self::rectangle_paper(variant)
        }
    }

    /// Semi-circular bend at full published scale.
    pub fn semicircle_paper(variant: Variant) -> Self {
        ExperimentConfig {
            domain: Domain::SemiCircular(SemiCircularDomain::default()),
            flow: FlowConfig::semicircle_defaults(),
            variant,
            subdomains: default_subdomains(variant),
            weights: LossWeights {
                beta: 1.0,
                gamma: 5.0,
                delta: 5.0,
            },
            hidden_layers: 7,
            hidden_width: 50,
            counts: CollocationCounts::semicircle_training(),
            // Prediction reuses the training budget for this geometry.
            prediction_counts: CollocationCounts::semicircle_training(),
            interface_points: 320,
            schedule: TrainingSchedule {
                adam_iters: 5000,
                adam_lr: 1e-3,
                batch_size: Some(20000),
                lbfgs_max_iters: 30000,
                ..TrainingSchedule::default()
            },
            seed: 0,
            parallel: false,
        }
    }

    /// Semi-circular bend reduced to desktop scale.
    pub fn semicircle_scaled(variant: Variant) -> Self {
        ExperimentConfig {
            hidden_layers: 2,
            hidden_width: 20,
            counts: CollocationCounts {
                total: 500,
                boundary: 60,
                inout: 20,
            },
            interface_points: 32,
            schedule: TrainingSchedule {
                adam_iters: 2000,
                adam_lr: 1e-3,
                batch_size: None,
                lbfgs_max_iters: 2000,
                ..TrainingSchedule::default()
            },
            ..Self::semicircle_paper(variant)
        }
    }

    /// Layer sizes of each subdomain network.
    pub fn architecture(&self) -> Vec<usize> {
        let mut arch = Vec::with_capacity(self.hidden_layers + 2);
        arch.push(3);
        arch.extend(std::iter::repeat(self.hidden_width).take(self.hidden_layers));
        arch.push(5);
        arch
    }

    /// Checks invariants and returns the normalized configuration: the
    /// single-network variant always runs with one subdomain.
    pub fn validate(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.clone();
        if cfg.variant == Variant::Wpinn {
            cfg.subdomains = 1;
        }
        if cfg.subdomains == 0 {
            return Err(Error::Configuration("subdomain count must be positive".into()));
        }
        if cfg.hidden_layers == 0 || cfg.hidden_width == 0 {
            return Err(Error::Configuration(
                "network needs at least one hidden layer of positive width".into(),
            ));
        }
        let w = cfg.weights;
        if !(w.beta.is_finite() && w.gamma.is_finite() && w.delta.is_finite()) {
            return Err(Error::Configuration("loss weights must be finite".into()));
        }
        if w.beta <= 0.0 || w.gamma < 0.0 || w.delta < 0.0 {
            return Err(Error::Configuration(
                "beta must be positive; gamma and delta non-negative".into(),
            ));
        }
        if cfg.counts.n_interior().is_none() {
            return Err(Error::Configuration(format!(
                "collocation budget {} leaves no interior points",
                cfg.counts.total
            )));
        }
        if cfg.subdomains > 1 && cfg.interface_points == 0 {
            return Err(Error::Configuration(
                "decomposed runs need interface points".into(),
            ));
        }
        let s = cfg.schedule;
        if s.adam_iters > 0 && !(s.adam_lr.is_finite() && s.adam_lr > 0.0) {
            return Err(Error::Configuration("Adam learning rate must be positive".into()));
        }
        if s.plateau_window == 0 {
            return Err(Error::Configuration("plateau window must be positive".into()));
        }
        if !(cfg.flow.density.is_finite() && cfg.flow.density > 0.0)
            || !(cfg.flow.viscosity.is_finite() && cfg.flow.viscosity > 0.0)
        {
            return Err(Error::Configuration(
                "density and viscosity must be positive".into(),
            ));
        }
        Ok(cfg)
    }
}

fn default_subdomains(variant: Variant) -> usize {
    if variant == Variant::Wpinn {
        1
    } else {
        2
    }
}

/// Result of a training run. On divergence the networks hold the last
/// finite iterate and `stop` records where training aborted.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: ExperimentConfig,
    pub networks: Vec<NetworkParams>,
    pub subdomains: Vec<SubdomainSpec>,
    pub initial_loss: LossBreakdown,
    pub final_loss: LossBreakdown,
    pub history: Vec<IterRecord>,
    pub wall_seconds: f64,
    pub iterations: usize,
    pub stop: Stop,
}

impl TrainedModel {
    pub fn diverged(&self) -> bool {
        matches!(self.stop, Stop::Diverged { .. })
    }
}

/// Reproduces the exact pre-training state of a run: the partitioned
/// collocation data and the freshly initialized subdomain networks.
pub fn initial_networks(
    config: &ExperimentConfig,
) -> Result<(Vec<NetworkParams>, Vec<SubdomainSpec>)> {
    let cfg = config.validate()?;
    let set = generate_collocation(&cfg.domain, &cfg.flow, &cfg.counts, cfg.seed)?;
    let subs = partition_domain(&cfg.domain, &set, cfg.subdomains, cfg.interface_points, cfg.seed)?;
    let arch = cfg.architecture();
    let nets = (0..cfg.subdomains)
        .map(|i| NetworkParams::init(&arch, derive_seed(cfg.seed, 1000 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((nets, subs))
}

/// Runs the full pipeline: sample collocation points, partition the domain,
/// initialize one network per subdomain, minimize the joint loss with Adam
/// followed by L-BFGS, and return the trained model with metrics.
pub fn train(config: &ExperimentConfig) -> Result<TrainedModel> {
    let cfg = config.validate()?;
    let start = Instant::now();

    let (init_nets, subs) = initial_networks(&cfg)?;
    let arch = cfg.architecture();
    let mut params = Vec::new();
    for net in init_nets {
        params.extend(net.to_flat());
    }

    let mut obj = FusedObjective::new(
        &subs,
        &arch,
        cfg.flow,
        cfg.weights,
        cfg.variant,
        cfg.schedule.batch_size,
        derive_seed(cfg.seed, 2000),
        cfg.parallel,
    )?;
    let mut scratch = vec![0.0; obj.param_count()];
    let initial_loss = obj.full(&params, &mut scratch)?;

    let outcome = optim::train_phase(&mut obj, &mut params, &cfg.schedule.optimizer_schedule())?;
    let final_loss = obj.full(&params, &mut scratch)?;
    drop(obj);

    let segment = params.len() / cfg.subdomains;
    let mut networks = Vec::with_capacity(cfg.subdomains);
    for i in 0..cfg.subdomains {
        let mut net = NetworkParams::zeros(&arch)?;
        net.read_flat(&params[i * segment..(i + 1) * segment]);
        networks.push(net);
    }

    Ok(TrainedModel {
        config: cfg,
        networks,
        subdomains: subs,
        initial_loss,
        final_loss,
        iterations: outcome.history.len(),
        history: outcome.history,
        wall_seconds: start.elapsed().as_secs_f64(),
        stop: outcome.stop,
    })
}

/// One full loss and gradient evaluation of the joint objective at the
/// given networks. The gradient is the concatenation of each network's
/// flat-parameter gradient, in subdomain order.
pub fn loss_and_gradient(
    nets: &[NetworkParams],
    subs: &[SubdomainSpec],
    flow: &FlowConfig,
    weights: LossWeights,
    variant: Variant,
    parallel: bool,
) -> Result<(LossBreakdown, Vec<f64>)> {
    if nets.len() != subs.len() {
        return Err(Error::Configuration(format!(
            "{} networks for {} subdomains",
            nets.len(),
            subs.len()
        )));
    }
    let arch = nets[0].layer_sizes().to_vec();
    for net in nets {
        if net.layer_sizes() != arch.as_slice() {
            return Err(Error::Configuration(
                "subdomain networks must share one architecture".into(),
            ));
        }
    }
    let mut obj = FusedObjective::new(subs, &arch, *flow, weights, variant, None, 0, parallel)?;
    let params: Vec<f64> = nets.iter().flat_map(|n| n.to_flat()).collect();
    let mut grad = vec![0.0; obj.param_count()];
    let breakdown = obj.full(&params, &mut grad)?;
    Ok((breakdown, grad))
}

/// Rebuilds an evaluable model from a configuration and previously saved
/// networks. The collocation partition is regenerated from the config's
/// seed; the stored loss is the networks' current full loss, so a
/// reconstructed model reports honest metrics without a training history.
pub fn rehydrate(config: &ExperimentConfig, networks: Vec<NetworkParams>) -> Result<TrainedModel> {
    let cfg = config.validate()?;
    if networks.len() != cfg.subdomains {
        return Err(Error::CheckpointIncompatible(format!(
            "{} networks for {} subdomains",
            networks.len(),
            cfg.subdomains
        )));
    }
    let arch = cfg.architecture();
    for net in &networks {
        if net.layer_sizes() != arch.as_slice() {
            return Err(Error::CheckpointIncompatible(format!(
                "network layers {:?} do not match configured architecture {:?}",
                net.layer_sizes(),
                arch
            )));
        }
    }
    let set = generate_collocation(&cfg.domain, &cfg.flow, &cfg.counts, cfg.seed)?;
    let subs = partition_domain(&cfg.domain, &set, cfg.subdomains, cfg.interface_points, cfg.seed)?;
    let loss = crate::physics::assemble_loss(&networks, &subs, &cfg.flow, cfg.weights, cfg.variant)?;
    Ok(TrainedModel {
        config: cfg,
        networks,
        subdomains: subs,
        initial_loss: loss,
        final_loss: loss,
        history: Vec::new(),
        wall_seconds: 0.0,
        iterations: 0,
        stop: Stop::IterationBudget,
    })
}

/// Both-sided predictions at the points of one interface pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceExchange {
    pub sub_i: usize,
    pub sub_j: usize,
    pub points: Vec<[f64; 3]>,
    /// (u, v, p) under subdomain i's network, one entry per point.
    pub side_i: Vec<(f64, f64, f64)>,
    /// Same points under subdomain j's network.
    pub side_j: Vec<(f64, f64, f64)>,
}

/// Evaluates every interface pair once under both neighboring networks.
///
/// All predictions come from the `nets` passed in, so the result is a
/// self-contained snapshot: later parameter changes cannot leak into it.
pub fn exchange_interface_predictions(
    nets: &[NetworkParams],
    subs: &[SubdomainSpec],
) -> Result<Vec<InterfaceExchange>> {
    if nets.len() != subs.len() {
        return Err(Error::Configuration(format!(
            "{} networks for {} subdomains",
            nets.len(),
            subs.len()
        )));
    }
    let mut exchanges = Vec::new();
    for (i, sub) in subs.iter().enumerate() {
        for iface in &sub.interfaces {
            let j = iface.neighbor;
            if j >= subs.len() {
                return Err(Error::InterfaceMismatch(i, j));
            }
            if i >= j {
                continue;
            }
            let mirror = subs[j]
                .interfaces
                .iter()
                .find(|m| m.neighbor == i)
                .ok_or(Error::InterfaceMismatch(i, j))?;
            if mirror.points != iface.points {
                return Err(Error::InterfaceMismatch(i, j));
            }
            let mut side_i = Vec::with_capacity(iface.points.len());
            let mut side_j = Vec::with_capacity(iface.points.len());
            for pt in &iface.points {
                side_i.push(velocity_pressure(&evaluate_with_derivatives(&nets[i], pt, 2)?));
                side_j.push(velocity_pressure(&evaluate_with_derivatives(&nets[j], pt, 2)?));
            }
            exchanges.push(InterfaceExchange {
                sub_i: i,
                sub_j: j,
                points: iface.points.clone(),
                side_i,
                side_j,
            });
        }
    }
    Ok(exchanges)
}

/// Root-mean-square interface residual over all pairs, points and the three
/// matched components (u, v, p). Zero when there are no interfaces.
pub fn interface_rms(nets: &[NetworkParams], subs: &[SubdomainSpec]) -> Result<f64> {
    let exchanges = exchange_interface_predictions(nets, subs)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for ex in &exchanges {
        for (&a, &b) in ex.side_i.iter().zip(&ex.side_j) {
            sum += interface_residuals(a, b).squared_sum();
            n += 3;
        }
    }
    if n == 0 {
        Ok(0.0)
    } else {
        Ok((sum / n as f64).sqrt())
    }
}

/// Assembled solution at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalSample {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

fn sample_network(net: &NetworkParams, query: [f64; 3]) -> Result<GlobalSample> {
    let eval = evaluate_with_derivatives(net, &query, 2)?;
    Ok(GlobalSample {
        u: eval.first[PSI][1],
        v: -eval.first[PSI][0],
        p: eval.outputs[P],
        s11: eval.outputs[S11],
        s12: eval.outputs[S12],
        s22: eval.outputs[S22],
    })
}

fn mean_sample(a: GlobalSample, b: GlobalSample) -> GlobalSample {
    GlobalSample {
        u: 0.5 * (a.u + b.u),
        v: 0.5 * (a.v + b.v),
        p: 0.5 * (a.p + b.p),
        s11: 0.5 * (a.s11 + b.s11),
        s12: 0.5 * (a.s12 + b.s12),
        s22: 0.5 * (a.s22 + b.s22),
    }
}

/// Distance below which a query counts as sitting on a dividing plane.
const INTERFACE_TOL: f64 = 1e-12;

/// Evaluates the trained model at a query point. The owning subdomain's
/// network answers; on a dividing plane both neighbors are averaged.
pub fn assemble_global_solution(model: &TrainedModel, query: [f64; 3]) -> Result<GlobalSample> {
    let [x, y, _t] = query;
    if !model.config.domain.contains(x, y, INTERFACE_TOL) {
        return Err(Error::OutOfDomain(x, y));
    }
    let m = model.subdomains.len();
    let owner = model
        .subdomains
        .iter()
        .position(|s| s.region.contains(x, y, s.index == m - 1))
        .unwrap_or(m - 1);

    let c = model.subdomains[owner].region.coordinate(x, y);
    let (lo, hi) = model.subdomains[owner].region.bounds();
    if owner > 0 && (c - lo).abs() <= INTERFACE_TOL {
        let a = sample_network(&model.networks[owner - 1], query)?;
        let b = sample_network(&model.networks[owner], query)?;
        return Ok(mean_sample(a, b));
    }
    if owner + 1 < m && (c - hi).abs() <= INTERFACE_TOL {
        let a = sample_network(&model.networks[owner], query)?;
        let b = sample_network(&model.networks[owner + 1], query)?;
        return Ok(mean_sample(a, b));
    }
    sample_network(&model.networks[owner], query)
}

/// Snapshot prediction: evaluates the assembled solution at every spatial
/// position of `grid` for each requested time. Returns one row group per
/// time, each with `interior + boundary + initial` rows.
pub fn predict_fields(
    model: &TrainedModel,
    grid: &CollocationSet,
    times: &[f64],
) -> Result<Vec<Vec<FieldRow>>> {
    let positions: Vec<[f64; 2]> = grid
        .interior
        .iter()
        .map(|p| [p[0], p[1]])
        .chain(grid.boundary.iter().map(|b| [b.pos[0], b.pos[1]]))
        .chain(grid.initial.iter().copied())
        .collect();
    let mut groups = Vec::with_capacity(times.len());
    for &t in times {
        let mut rows = Vec::with_capacity(positions.len());
        for &[x, y] in &positions {
            let s = assemble_global_solution(model, [x, y, t])?;
            rows.push(FieldRow {
                x,
                y,
                t,
                u: s.u,
                v: s.v,
                p: s.p,
            });
        }
        groups.push(rows);
    }
    Ok(groups)
}

/// Default snapshot times: at most six evenly spaced multiples of the
/// domain's time step spanning [0, T].
pub fn default_snapshot_times(domain: &Domain) -> Vec<f64> {
    let dt = domain.time_step();
    let steps = (domain.final_time() / dt).round() as usize;
    if steps == 0 {
        return vec![0.0];
    }
    let k = steps.min(5);
    (0..=k).map(|i| (i * steps / k) as f64 * dt).collect()
}
