//! One-dimensional parameter sweeps and the figure presets.

use serde::{Deserialize, Serialize};

use crate::doppler::QuadratureSpec;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{sodium_d1, AtomMedium, DriveFields};
use crate::propagate::{
    integrate_propagation, PropagationConfig, PropagationTrace, DEFAULT_ABS_TOL, DEFAULT_REL_TOL,
};

pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Everything needed to run one propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub medium: AtomMedium,
    pub fields: DriveFields,
    pub zeta_end: f64,
    pub sample_count: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub quadrature: QuadratureSpec,
}

impl RunSetup {
    pub fn propagation_config(&self, execution: Execution) -> Result<PropagationConfig> {
        let mut cfg = PropagationConfig::new(
            self.fields,
            self.quadrature.build(self.medium.vp)?,
            self.zeta_end,
            self.sample_count,
        );
        cfg.rel_tol = self.rel_tol;
        cfg.abs_tol = self.abs_tol;
        cfg.execution = execution;
        Ok(cfg)
    }

    pub fn run(&self, execution: Execution) -> Result<PropagationTrace> {
        self.medium.validate()?;
        integrate_propagation(&self.propagation_config(execution)?, &self.medium)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `Delta_m`, with `Delta31` fixed.
    MwDetuning,
    /// Common optical detuning `Delta31 = Delta32` at microwave resonance.
    OpticalDetuning,
    /// Microwave Rabi frequency `gm`.
    MwRabi,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MwDetuning => "delta_m",
            SweepParameter::OpticalDetuning => "delta31",
            SweepParameter::MwRabi => "gm",
        }
    }

    fn apply(self, fields: &DriveFields, value: f64) -> DriveFields {
        let mut f = *fields;
        match self {
            SweepParameter::MwDetuning => f.delta_m = value,
            SweepParameter::OpticalDetuning => {
                f.delta31 = value;
                f.delta_m = 0.0;
            }
            SweepParameter::MwRabi => f.gm = value,
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Intensities at `zeta_end` only.
    #[default]
    EndPoint,
    /// The whole trace of every point is kept.
    FullTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: RunSetup,
    pub observable: Observable,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::domain("sweep has no values"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sweep values must be finite"));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::domain("sweep values must be strictly monotone"));
        }
        if self.parameter == SweepParameter::MwRabi && self.values.iter().any(|&v| v < 0.0) {
            return Err(Error::domain("microwave Rabi frequency must be >= 0"));
        }
        self.base.medium.validate()?;
        self.base.propagation_config(Execution::Serial)?.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub i32_rel: f64,
    pub i31_rel: f64,
    pub g0sq: f64,
    pub phi_wrapped: f64,
    pub rho33_avg: f64,
    pub steps: usize,
    pub status: PointStatus,
    #[serde(skip)]
    pub trace: Option<PropagationTrace>,
}

impl SweepRow {
    fn failed(value: f64, err: &Error) -> Self {
        SweepRow {
            value,
            i32_rel: f64::NAN,
            i31_rel: f64::NAN,
            g0sq: f64::NAN,
            phi_wrapped: f64::NAN,
            rho33_avg: f64::NAN,
            steps: 0,
            status: PointStatus::Failed(err.to_string()),
            trace: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub spec: SweepSpec,
    pub quadrature_nodes: usize,
    pub artifact_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Row with the largest generated intensity among successful points.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.is_ok())
            .max_by(|a, b| a.i32_rel.total_cmp(&b.i32_rel))
    }
}

fn row_from(spec: &SweepSpec, value: f64, outcome: Result<PropagationTrace>) -> SweepRow {
    match outcome {
        Ok(trace) => {
            let end = *trace.last();
            SweepRow {
                value,
                i32_rel: end.i32_rel,
                i31_rel: end.i31_rel,
                g0sq: end.g0sq,
                phi_wrapped: end.phi_wrapped,
                rho33_avg: end.rho33_avg,
                steps: trace.stats.accepted,
                status: PointStatus::Ok,
                trace: (spec.observable == Observable::FullTrace).then_some(trace),
            }
        }
        Err(e) => SweepRow::failed(value, &e),
    }
}

fn sweep_with<F>(spec: &SweepSpec, execution: Execution, point: F) -> Result<SweepTable>
where
    F: Fn(&RunSetup) -> Result<PropagationTrace> + Sync + Send,
{
    spec.validate()?;
    let quadrature_nodes = spec.base.quadrature.build(spec.base.medium.vp)?.len();
    let rows = execution.map(&spec.values, |&v| {
        let setup = RunSetup {
            fields: spec.parameter.apply(&spec.base.fields, v),
            ..spec.base.clone()
        };
        row_from(spec, v, point(&setup))
    });
    Ok(SweepTable {
        metadata: SweepMetadata {
            spec: spec.clone(),
            quadrature_nodes,
            artifact_version: ARTIFACT_VERSION.into(),
        },
        rows,
    })
}

/// Propagate once per sweep value. Failed points are recorded in their
/// row; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec, execution: Execution) -> Result<SweepTable> {
    // points are the unit of parallel work; each propagation runs serially
    sweep_with(spec, execution, |setup| setup.run(Execution::Serial))
}

pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

/// A named configuration: a single run, or a sweep around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePreset {
    pub name: String,
    pub setup: RunSetup,
    pub sweep: Option<(SweepParameter, Vec<f64>)>,
}

impl FigurePreset {
    pub fn sweep_spec(&self) -> Option<SweepSpec> {
        self.sweep.as_ref().map(|(parameter, values)| SweepSpec {
            parameter: *parameter,
            values: values.clone(),
            base: self.setup.clone(),
            observable: Observable::EndPoint,
        })
    }
}

/// `n` points spaced evenly in log between `lo` and `hi` (inclusive).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// `n` evenly spaced points between `lo` and `hi` (inclusive).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn fig2_setup() -> RunSetup {
    RunSetup {
        medium: sodium_d1(),
        fields: DriveFields::resonant(2.0, 0.0, 0.02, 0.0),
        zeta_end: 400.0,
        sample_count: 801,
        rel_tol: DEFAULT_REL_TOL,
        abs_tol: DEFAULT_ABS_TOL,
        quadrature: QuadratureSpec::default(),
    }
}

pub fn figure_preset(name: &str) -> Result<FigurePreset> {
    let sweep_base = RunSetup {
        zeta_end: 340.0,
        sample_count: 2,
        ..fig2_setup()
    };
    let (setup, sweep) = match name {
        "fig2" => (fig2_setup(), None),
        "fig3" => {
            let side = logspace(1e-7, 5e-3, 100);
            let mut values: Vec<f64> = side.iter().rev().map(|v| -v).collect();
            values.push(0.0);
            values.extend(side);
            (sweep_base, Some((SweepParameter::MwDetuning, values)))
        }
        "fig4" => (
            sweep_base,
            Some((
                SweepParameter::OpticalDetuning,
                linspace(-200.0, 200.0, 201),
            )),
        ),
        "fig5" => {
            let mut values = logspace(1e-3, 1e3, 160);
            values.extend(linspace(0.005, 0.05, 60));
            values.sort_by(f64::total_cmp);
            values.dedup();
            (sweep_base, Some((SweepParameter::MwRabi, values)))
        }
        other => {
            return Err(Error::UnknownPreset {
                name: other.into(),
                available: PRESET_NAMES.join(", "),
            });
        }
    };
    Ok(FigurePreset {
        name: name.into(),
        setup,
        sweep,
    })
}
