//! Sectioned key-value experiment files.
//!
//! The format is strict on purpose: every key of the active domain kind is
//! required, unknown keys are rejected with their line number, and floats
//! are written with the shortest round-tripping representation so that
//! serialize → parse reproduces the configuration exactly.

use pinnflow_core::error::{Error, Result};
use pinnflow_core::geometry::{
    CollocationCounts, Domain, FlowConfig, RectangleDomain, SemiCircularDomain,
};
use pinnflow_core::physics::{LossWeights, Variant};
use pinnflow_core::trainer::{ExperimentConfig, TrainingSchedule};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const PRESETS: [&str; 4] = [
    "rectangle-paper",
    "rectangle-scaled",
    "semicircle-paper",
    "semicircle-scaled",
];

const SECTIONS: [&str; 6] = [
    "domain",
    "flow",
    "network",
    "training",
    "decomposition",
    "output",
];

pub fn preset(name: &str, variant: Variant) -> Result<ExperimentConfig> {
    match name {
        "rectangle-paper" => Ok(ExperimentConfig::rectangle_paper(variant)),
        "rectangle-scaled" => Ok(ExperimentConfig::rectangle_scaled(variant)),
        "semicircle-paper" => Ok(ExperimentConfig::semicircle_paper(variant)),
        "semicircle-scaled" => Ok(ExperimentConfig::semicircle_scaled(variant)),
        other => Err(Error::Configuration(format!(
            "unknown preset '{other}'; available: {}",
            PRESETS.join(", ")
        ))),
    }
}

pub fn parse_variant(text: &str) -> Result<Variant> {
    match text.to_ascii_lowercase().as_str() {
        "wpinn" => Ok(Variant::Wpinn),
        "wxpinn" => Ok(Variant::Wxpinn),
        "wcpinn" => Ok(Variant::Wcpinn),
        other => Err(Error::Configuration(format!(
            "unknown variant '{other}' (expected wpinn, wxpinn or wcpinn)"
        ))),
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Key-value entries grouped by section, with line numbers kept for
/// diagnostics and a used-flag per entry so leftovers can be rejected.
struct Table {
    entries: BTreeMap<(String, String), Entry>,
}

impl Table {
    fn scan(text: &str) -> Result<Table> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::Configuration(format!("line {line}: malformed section header '{trimmed}'"))
                })?;
                if !SECTIONS.contains(&name) {
                    return Err(Error::Configuration(format!(
                        "line {line}: unknown section '[{name}]'"
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::Configuration(format!("line {line}: expected 'key = value', got '{trimmed}'"))
            })?;
            let section = section.clone().ok_or_else(|| {
                Error::Configuration(format!("line {line}: key before any [section] header"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Configuration(format!("line {line}: empty key")));
            }
            let previous = entries.insert(
                (section.clone(), key.clone()),
                Entry {
                    line,
                    value,
                    used: false,
                },
            );
            if let Some(previous) = previous {
                return Err(Error::Configuration(format!(
                    "line {line}: duplicate key '{section}.{key}' (first set on line {})",
                    previous.line
                )));
            }
        }
        Ok(Table { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Result<(usize, String)> {
        match self.entries.get_mut(&(section.to_string(), key.to_string())) {
            Some(entry) => {
                entry.used = true;
                Ok((entry.line, entry.value.clone()))
            }
            None => Err(Error::Configuration(format!(
                "missing key '{section}.{key}'"
            ))),
        }
    }

    fn f64(&mut self, section: &str, key: &str) -> Result<f64> {
        let (line, value) = self.take(section, key)?;
        value.parse().map_err(|_| {
            Error::Configuration(format!(
                "line {line}: expected a number for '{section}.{key}', got '{value}'"
            ))
        })
    }

    fn usize(&mut self, section: &str, key: &str) -> Result<usize> {
        let (line, value) = self.take(section, key)?;
        value.parse().map_err(|_| {
            Error::Configuration(format!(
                "line {line}: expected an integer for '{section}.{key}', got '{value}'"
            ))
        })
    }

    fn u64(&mut self, section: &str, key: &str) -> Result<u64> {
        let (line, value) = self.take(section, key)?;
        value.parse().map_err(|_| {
            Error::Configuration(format!(
                "line {line}: expected an integer for '{section}.{key}', got '{value}'"
            ))
        })
    }

    fn bool(&mut self, section: &str, key: &str) -> Result<bool> {
        let (line, value) = self.take(section, key)?;
        match value.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Configuration(format!(
                "line {line}: expected true or false for '{section}.{key}', got '{other}'"
            ))),
        }
    }

    /// `none` or a positive integer.
    fn batch(&mut self, section: &str, key: &str) -> Result<Option<usize>> {
        let (line, value) = self.take(section, key)?;
        if value == "none" {
            return Ok(None);
        }
        value.parse().map(Some).map_err(|_| {
            Error::Configuration(format!(
                "line {line}: expected 'none' or an integer for '{section}.{key}', got '{value}'"
            ))
        })
    }

    fn finish(self) -> Result<()> {
        let mut leftovers: Vec<(usize, String)> = self
            .entries
            .into_iter()
            .filter(|(_, entry)| !entry.used)
            .map(|((section, key), entry)| (entry.line, format!("{section}.{key}")))
            .collect();
        if leftovers.is_empty() {
            return Ok(());
        }
        leftovers.sort();
        let listed: Vec<String> = leftovers
            .iter()
            .map(|(line, name)| format!("'{name}' (line {line})"))
            .collect();
        Err(Error::Configuration(format!(
            "unexpected key{}: {}",
            if listed.len() == 1 { "" } else { "s" },
            listed.join(", ")
        )))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut t = Table::scan(text)?;

    let (kind_line, kind) = t.take("domain", "kind")?;
    let domain = match kind.as_str() {
        "rectangle" => Domain::Rectangle(RectangleDomain {
            length: t.f64("domain", "length")?,
            height: t.f64("domain", "height")?,
            final_time: t.f64("domain", "final_time")?,
            time_step: t.f64("domain", "time_step")?,
        }),
        "semicircle" => Domain::SemiCircular(SemiCircularDomain {
            cross_radius: t.f64("domain", "cross_radius")?,
            bend_radius: t.f64("domain", "bend_radius")?,
            final_time: t.f64("domain", "final_time")?,
            time_step: t.f64("domain", "time_step")?,
            stenosis_amplitude: t.f64("domain", "stenosis_amplitude")?,
            stenosis_center: t.f64("domain", "stenosis_center")?,
            stenosis_width: t.f64("domain", "stenosis_width")?,
        }),
        other => {
            return Err(Error::Configuration(format!(
                "line {kind_line}: unknown domain kind '{other}' (expected rectangle or semicircle)"
            )))
        }
    };

    let flow = FlowConfig {
        density: t.f64("flow", "density")?,
        viscosity: t.f64("flow", "viscosity")?,
        u_max: t.f64("flow", "u_max")?,
    };

    let hidden_layers = t.usize("network", "hidden_layers")?;
    let hidden_width = t.usize("network", "hidden_width")?;

    let (variant_line, variant_text) = t.take("training", "variant")?;
    let variant = parse_variant(&variant_text)
        .map_err(|_| Error::Configuration(format!(
            "line {variant_line}: unknown variant '{variant_text}' (expected wpinn, wxpinn or wcpinn)"
        )))?;
    let weights = LossWeights {
        beta: t.f64("training", "beta")?,
        gamma: t.f64("training", "gamma")?,
        delta: t.f64("training", "delta")?,
    };
    let counts = CollocationCounts {
        total: t.usize("training", "points_total")?,
        boundary: t.usize("training", "points_boundary")?,
        inout: t.usize("training", "points_inout")?,
    };
    let schedule = TrainingSchedule {
        adam_iters: t.usize("training", "adam_iters")?,
        adam_lr: t.f64("training", "adam_lr")?,
        batch_size: t.batch("training", "batch_size")?,
        lbfgs_max_iters: t.usize("training", "lbfgs_max_iters")?,
        grad_tolerance: t.f64("training", "grad_tolerance")?,
        plateau_tolerance: t.f64("training", "plateau_tolerance")?,
        plateau_window: t.usize("training", "plateau_window")?,
    };
    let seed = t.u64("training", "seed")?;
    let parallel = t.bool("training", "parallel")?;

    let subdomains = t.usize("decomposition", "subdomains")?;
    let interface_points = t.usize("decomposition", "interface_points")?;

    let prediction_counts = CollocationCounts {
        total: t.usize("output", "prediction_total")?,
        boundary: t.usize("output", "prediction_boundary")?,
        inout: t.usize("output", "prediction_inout")?,
    };

    t.finish()?;

    Ok(ExperimentConfig {
        domain,
        flow,
        variant,
        subdomains,
        weights,
        hidden_layers,
        hidden_width,
        counts,
        prediction_counts,
        interface_points,
        schedule,
        seed,
        parallel,
    })
}

pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str("[domain]\n");
    match &cfg.domain {
        Domain::Rectangle(d) => {
            out.push_str("kind = rectangle\n");
            let _ = writeln!(out, "length = {}", d.length);
            let _ = writeln!(out, "height = {}", d.height);
            let _ = writeln!(out, "final_time = {}", d.final_time);
            let _ = writeln!(out, "time_step = {}", d.time_step);
        }
        Domain::SemiCircular(d) => {
            out.push_str("kind = semicircle\n");
            let _ = writeln!(out, "cross_radius = {}", d.cross_radius);
            let _ = writeln!(out, "bend_radius = {}", d.bend_radius);
            let _ = writeln!(out, "final_time = {}", d.final_time);
            let _ = writeln!(out, "time_step = {}", d.time_step);
            let _ = writeln!(out, "stenosis_amplitude = {}", d.stenosis_amplitude);
            let _ = writeln!(out, "stenosis_center = {}", d.stenosis_center);
            let _ = writeln!(out, "stenosis_width = {}", d.stenosis_width);
        }
    }
    out.push_str("\n[flow]\n");
    let _ = writeln!(out, "density = {}", cfg.flow.density);
    let _ = writeln!(out, "viscosity = {}", cfg.flow.viscosity);
    let _ = writeln!(out, "u_max = {}", cfg.flow.u_max);
    out.push_str("\n[network]\n");
    let _ = writeln!(out, "hidden_layers = {}", cfg.hidden_layers);
    let _ = writeln!(out, "hidden_width = {}", cfg.hidden_width);
    out.push_str("\n[training]\n");
    let _ = writeln!(out, "variant = {}", cfg.variant.name());
    let _ = writeln!(out, "beta = {}", cfg.weights.beta);
    let _ = writeln!(out, "gamma = {}", cfg.weights.gamma);
    let _ = writeln!(out, "delta = {}", cfg.weights.delta);
    let _ = writeln!(out, "points_total = {}", cfg.counts.total);
    let _ = writeln!(out, "points_boundary = {}", cfg.counts.boundary);
    let _ = writeln!(out, "points_inout = {}", cfg.counts.inout);
    let _ = writeln!(out, "adam_iters = {}", cfg.schedule.adam_iters);
    let _ = writeln!(out, "adam_lr = {}", cfg.schedule.adam_lr);
    match cfg.schedule.batch_size {
        Some(n) => {
            let _ = writeln!(out, "batch_size = {n}");
        }
        None => out.push_str("batch_size = none\n"),
    }
    let _ = writeln!(out, "lbfgs_max_iters = {}", cfg.schedule.lbfgs_max_iters);
    let _ = writeln!(out, "grad_tolerance = {}", cfg.schedule.grad_tolerance);
    let _ = writeln!(out, "plateau_tolerance = {}", cfg.schedule.plateau_tolerance);
    let _ = writeln!(out, "plateau_window = {}", cfg.schedule.plateau_window);
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "parallel = {}", cfg.parallel);
    out.push_str("\n[decomposition]\n");
    let _ = writeln!(out, "subdomains = {}", cfg.subdomains);
    let _ = writeln!(out, "interface_points = {}", cfg.interface_points);
    out.push_str("\n[output]\n");
    let _ = writeln!(out, "prediction_total = {}", cfg.prediction_counts.total);
    let _ = writeln!(out, "prediction_boundary = {}", cfg.prediction_counts.boundary);
    let _ = writeln!(out, "prediction_inout = {}", cfg.prediction_counts.inout);
    out
}
