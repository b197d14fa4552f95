//! CSV tables and their JSON sidecars.
//!
//! Numbers are written with 17 significant digits in scientific notation.
//! Formatting does not depend on the locale, so equal inputs give
//! byte-identical files.

use std::io::{self, Write};

use mwconv::propagate::PropagationTrace;
use mwconv::scan::{PointStatus, RunSetup, SweepParameter, SweepTable, ARTIFACT_VERSION};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const TRACE_HEADER: &str =
    "zeta,I31_rel,I32_rel,Phi_wrapped,Phi_unwrapped,g0sq,rho33_avg,motion_const";

pub const SWEEP_COLUMNS: &str = "I32_rel,I31_rel,g0sq,Phi_wrapped,rho33_avg,steps,status";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv(w: &mut impl Write, trace: &PropagationTrace) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for s in &trace.samples {
        let row = [
            s.zeta,
            s.i31_rel,
            s.i32_rel,
            s.phi_wrapped,
            s.phi_unwrapped,
            s.g0sq,
            s.rho33_avg,
            s.motion_const,
        ]
        .map(num);
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Sweep table; the first column is named after the swept parameter.
pub fn write_sweep_csv(w: &mut impl Write, table: &SweepTable) -> io::Result<()> {
    writeln!(
        w,
        "{},{SWEEP_COLUMNS}",
        table.metadata.spec.parameter.name()
    )?;
    for r in &table.rows {
        let status = match r.status {
            PointStatus::Ok => "ok",
            PointStatus::Failed(_) => "failed",
        };
        let nums = [
            r.value,
            r.i32_rel,
            r.i31_rel,
            r.g0sq,
            r.phi_wrapped,
            r.rho33_avg,
        ]
        .map(num);
        writeln!(w, "{},{},{status}", nums.join(","), r.steps)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub value: f64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakSummary {
    pub zeta: f64,
    pub i32_rel: f64,
}

/// Metadata written next to every CSV. `config_text` and `sweep` alone
/// reproduce the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub artifact_version: String,
    pub command: String,
    pub csv: String,
    pub config_text: String,
    pub sweep: Option<SweepGrid>,
    /// Resolved dimensionless inputs, for reference.
    pub setup: RunSetup,
    pub quadrature_nodes: usize,
    pub threads: Option<usize>,
    pub execution: String,
    pub rows: usize,
    pub first_peak: Option<PeakSummary>,
    pub integration_steps: Option<usize>,
    pub failures: Vec<PointFailure>,
}

impl Sidecar {
    pub fn new(command: &str, csv: &str, config: &RunConfig, setup: &RunSetup) -> Self {
        Sidecar {
            artifact_version: ARTIFACT_VERSION.into(),
            command: command.into(),
            csv: csv.into(),
            config_text: config.to_text(),
            sweep: None,
            setup: setup.clone(),
            quadrature_nodes: 0,
            threads: None,
            execution: String::new(),
            rows: 0,
            first_peak: None,
            integration_steps: None,
            failures: Vec::new(),
        }
    }
}

/// The part of a sidecar needed to run again.
#[derive(Debug, Clone, Deserialize)]
pub struct Replay {
    pub command: String,
    pub config_text: String,
    pub sweep: Option<SweepGrid>,
}

pub fn failures_of(table: &SweepTable) -> Vec<PointFailure> {
    table
        .rows
        .iter()
        .filter_map(|r| match &r.status {
            PointStatus::Failed(m) => Some(PointFailure {
                value: r.value,
                message: m.clone(),
            }),
            PointStatus::Ok => None,
        })
        .collect()
}
