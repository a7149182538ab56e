//! CSV and plain-text emitters for training artifacts.
//!
//! Formats are stable: fixed headers, one row per record, floats printed
//! with Rust's shortest round-trip representation so identical runs yield
//! byte-identical files.

use crate::geometry::CollocationSet;
use crate::optim::{IterRecord, Phase};
use crate::physics::GoverningResiduals;
use std::fmt::Write as _;

pub const LOSS_HISTORY_HEADER: &str =
    "iter,phase,loss_g,loss_bc_ic,loss_interface,loss_flux,total,alpha";
pub const FIELDS_HEADER: &str = "x,y,t,u,v,p,magnitude";
pub const POINTS_HEADER: &str = "x,y,t,target_u,target_v,target_p";
pub const RESIDUALS_HEADER: &str = "x,y,t,R_u,R_v,R_p,R_s11,R_s12,R_s22";
pub const SWEEP_HEADER: &str = "M,beta,gamma,delta,final_loss,comp_time_s,iterations,status";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One optimizer iteration per row; `alpha` is empty for Adam rows.
pub fn loss_history_csv(history: &[IterRecord]) -> String {
    let mut out = String::with_capacity(64 * (history.len() + 1));
    out.push_str(LOSS_HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let b = &r.breakdown;
        let alpha = match r.phase {
            Phase::Adam => String::new(),
            Phase::Lbfgs => opt(r.step_size),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            r.phase.name(),
            b.governing,
            b.bc_ic,
            b.interface,
            b.flux,
            b.total,
            alpha
        )
        .unwrap();
    }
    out
}

/// A predicted flow sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl FieldRow {
    pub fn magnitude(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

pub fn fields_csv(rows: &[FieldRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(FIELDS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.x,
            r.y,
            r.t,
            r.u,
            r.v,
            r.p,
            r.magnitude()
        )
        .unwrap();
    }
    out
}

/// Dumps a collocation set: interior rows carry no targets, boundary rows
/// their prescribed values, initial rows the rest state at t = 0.
pub fn points_csv(set: &CollocationSet) -> String {
    let mut out = String::new();
    out.push_str(POINTS_HEADER);
    out.push('\n');
    for p in &set.interior {
        writeln!(out, "{},{},{},,,", p[0], p[1], p[2]).unwrap();
    }
    for b in &set.boundary {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            b.pos[0],
            b.pos[1],
            b.pos[2],
            opt(b.target_u),
            opt(b.target_v),
            opt(b.target_p)
        )
        .unwrap();
    }
    for p in &set.initial {
        writeln!(out, "{},{},0,0,0,", p[0], p[1]).unwrap();
    }
    out
}

pub fn residuals_csv(rows: &[([f64; 3], GoverningResiduals)]) -> String {
    let mut out = String::new();
    out.push_str(RESIDUALS_HEADER);
    out.push('\n');
    for (pos, r) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            pos[0],
            pos[1],
            pos[2],
            r.momentum_x,
            r.momentum_y,
            r.pressure,
            r.stress_xx,
            r.stress_xy,
            r.stress_yy
        )
        .unwrap();
    }
    out
}

/// One sweep run's metrics. `status` is "ok" or a short failure note.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub subdomains: usize,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub final_loss: f64,
    pub comp_time_s: f64,
    pub iterations: usize,
    pub status: String,
}

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.subdomains,
            r.beta,
            r.gamma,
            r.delta,
            r.final_loss,
            r.comp_time_s,
            r.iterations,
            csv_safe(&r.status)
        )
        .unwrap();
    }
    out
}

/// Aligned text table with the metrics columns of the performance
/// summaries: final loss, computation time, total iterations.
pub fn sweep_text_table(rows: &[SweepRow]) -> String {
    let headers = [
        "M",
        "Beta",
        "Gamma",
        "Delta",
        "Final Loss",
        "Comp. Time (s)",
        "# Iter. (Total)",
        "Status",
    ];
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.subdomains.to_string(),
                r.beta.to_string(),
                r.gamma.to_string(),
                r.delta.to_string(),
                format!("{:.7e}", r.final_loss),
                format!("{:.2}", r.comp_time_s),
                r.iterations.to_string(),
                r.status.clone(),
            ]
        })
        .collect();

    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(c.len());
        }
    }

    let mut out = String::new();
    let mut push_row = |cols: &[String]| {
        let line: Vec<String> = cols
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    push_row(&headers.map(String::from));
    push_row(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in &cells {
        push_row(row);
    }
    out
}
