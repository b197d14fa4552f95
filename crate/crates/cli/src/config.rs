//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # Na cell with a stronger microwave field
//! preset = fig2
//! gm = 0.04
//! ```
//!
//! `#` starts a comment. A `preset` is applied first wherever it appears;
//! every other key then overrides it. Keys left unset keep the defaults of
//! the `fig2` configuration.

use std::fmt;

use mwconv::doppler::{QuadratureKind, QuadratureSpec};
use mwconv::model::{LabParameters, SODIUM_D1};
use mwconv::num_complex::Complex64;
use mwconv::scan::{figure_preset, RunSetup, SweepParameter, PRESET_NAMES};
use mwconv::{AtomMedium, DriveFields};
use serde::{Deserialize, Serialize};

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Argument(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Argument(a) => write!(f, "argument `{a}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub origin: Option<Origin>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.origin, &self.key) {
            (Some(o), Some(k)) => write!(f, "{o}: `{k}`: {}", self.message),
            (Some(o), None) => write!(f, "{o}: {}", self.message),
            (None, Some(k)) => write!(f, "`{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub const KEYS: [&str; 19] = [
    "preset",
    "gamma31_hz",
    "gamma32_rel",
    "Gamma_rel",
    "lambda31_nm",
    "omega21_hz",
    "density_per_cm3",
    "temperature_K",
    "mass_amu",
    "g31_in",
    "gm",
    "delta31",
    "delta_m",
    "chi_m",
    "zeta_end",
    "samples",
    "quad_nodes",
    "rel_tol",
    "abs_tol",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub lab: LabParameters,
    pub g31_in: f64,
    pub gm: f64,
    pub delta31: f64,
    pub delta_m: f64,
    pub chi_m: f64,
    pub zeta_end: f64,
    pub samples: usize,
    pub quad_nodes: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Sweep carried by the preset, if any.
    pub sweep: Option<(SweepParameter, Vec<f64>)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_preset("fig2").expect("fig2 preset exists")
    }
}

fn config_error(
    key: Option<&str>,
    origin: Option<&Origin>,
    message: impl Into<String>,
) -> ConfigError {
    ConfigError {
        key: key.map(str::to_owned),
        origin: origin.cloned(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let preset =
            figure_preset(name).map_err(|e| config_error(Some("preset"), None, e.to_string()))?;
        let s = &preset.setup;
        Ok(RunConfig {
            preset: Some(name.to_owned()),
            lab: SODIUM_D1,
            g31_in: s.fields.g1(),
            gm: s.fields.gm,
            delta31: s.fields.delta31,
            delta_m: s.fields.delta_m,
            chi_m: s.fields.chi_m,
            zeta_end: s.zeta_end,
            samples: s.sample_count,
            quad_nodes: s.quadrature.order,
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            sweep: preset.sweep,
        })
    }

    fn set(&mut self, key: &str, value: &str, origin: &Origin) -> Result<(), ConfigError> {
        let err = |m: String| config_error(Some(key), Some(origin), m);
        let real = || -> Result<f64, ConfigError> {
            let v: f64 = value
                .parse()
                .map_err(|_| err(format!("cannot parse `{value}` as a number")))?;
            if !v.is_finite() {
                return Err(err(format!("value must be finite, got `{value}`")));
            }
            Ok(v)
        };
        let count = || -> Result<usize, ConfigError> {
            value
                .parse()
                .map_err(|_| err(format!("cannot parse `{value}` as a non-negative integer")))
        };
        match key {
            "gamma31_hz" => self.lab.gamma31_hz = real()?,
            "gamma32_rel" => self.lab.gamma32_rel = real()?,
            "Gamma_rel" => self.lab.ground_decay_rel = real()?,
            "lambda31_nm" => self.lab.lambda31_nm = real()?,
            "omega21_hz" => self.lab.omega21_hz = real()?,
            "density_per_cm3" => self.lab.density_per_cm3 = real()?,
            "temperature_K" => self.lab.temperature_k = real()?,
            "mass_amu" => self.lab.mass_amu = real()?,
            "g31_in" => self.g31_in = real()?,
            "gm" => self.gm = real()?,
            "delta31" => self.delta31 = real()?,
            "delta_m" => self.delta_m = real()?,
            "chi_m" => self.chi_m = real()?,
            "zeta_end" => self.zeta_end = real()?,
            "samples" => self.samples = count()?,
            "quad_nodes" => self.quad_nodes = count()?,
            "rel_tol" => self.rel_tol = real()?,
            "abs_tol" => self.abs_tol = real()?,
            _ => {
                return Err(err(format!(
                    "unknown key (expected one of: {})",
                    KEYS.join(", ")
                )))
            }
        }
        check_key(self, key).map_err(err)
    }

    /// Canonical text form; parsing it gives back an identical configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.preset {
            out += &format!("preset = {p}\n");
        }
        for (k, v) in self.numeric_entries() {
            out += &format!("{k} = {v}\n");
        }
        out
    }

    fn numeric_entries(&self) -> Vec<(&'static str, String)> {
        let r = |x: f64| format!("{x:?}");
        vec![
            ("gamma31_hz", r(self.lab.gamma31_hz)),
            ("gamma32_rel", r(self.lab.gamma32_rel)),
            ("Gamma_rel", r(self.lab.ground_decay_rel)),
            ("lambda31_nm", r(self.lab.lambda31_nm)),
            ("omega21_hz", r(self.lab.omega21_hz)),
            ("density_per_cm3", r(self.lab.density_per_cm3)),
            ("temperature_K", r(self.lab.temperature_k)),
            ("mass_amu", r(self.lab.mass_amu)),
            ("g31_in", r(self.g31_in)),
            ("gm", r(self.gm)),
            ("delta31", r(self.delta31)),
            ("delta_m", r(self.delta_m)),
            ("chi_m", r(self.chi_m)),
            ("zeta_end", r(self.zeta_end)),
            ("samples", self.samples.to_string()),
            ("quad_nodes", self.quad_nodes.to_string()),
            ("rel_tol", r(self.rel_tol)),
            ("abs_tol", r(self.abs_tol)),
        ]
    }

    pub fn medium(&self) -> Result<AtomMedium, ConfigError> {
        AtomMedium::from_lab(&self.lab).map_err(|e| config_error(None, None, e.to_string()))
    }

    pub fn fields(&self) -> DriveFields {
        DriveFields {
            a1: Complex64::new(self.g31_in, 0.0),
            a2: Complex64::new(0.0, 0.0),
            gm: self.gm,
            chi_m: self.chi_m,
            delta31: self.delta31,
            delta_m: self.delta_m,
        }
    }

    pub fn setup(&self) -> Result<RunSetup, ConfigError> {
        Ok(RunSetup {
            medium: self.medium()?,
            fields: self.fields(),
            zeta_end: self.zeta_end,
            sample_count: self.samples,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            quadrature: QuadratureSpec {
                kind: QuadratureKind::GaussHermite,
                order: self.quad_nodes,
            },
        })
    }
}

fn check_key(c: &RunConfig, key: &str) -> Result<(), String> {
    let positive = |v: f64| {
        if v > 0.0 {
            Ok(())
        } else {
            Err(format!("must be > 0, got {v}"))
        }
    };
    let non_negative = |v: f64| {
        if v >= 0.0 {
            Ok(())
        } else {
            Err(format!("must be >= 0, got {v}"))
        }
    };
    let tolerance = |v: f64| {
        if v > 0.0 && v <= 1e-2 {
            Ok(())
        } else {
            Err(format!("must lie in (0, 1e-2], got {v}"))
        }
    };
    match key {
        "gamma31_hz" => positive(c.lab.gamma31_hz),
        "gamma32_rel" => positive(c.lab.gamma32_rel),
        "Gamma_rel" => non_negative(c.lab.ground_decay_rel),
        "lambda31_nm" => positive(c.lab.lambda31_nm),
        "omega21_hz" => positive(c.lab.omega21_hz),
        "density_per_cm3" => positive(c.lab.density_per_cm3),
        "temperature_K" => non_negative(c.lab.temperature_k),
        "mass_amu" => positive(c.lab.mass_amu),
        "g31_in" => positive(c.g31_in),
        "gm" => non_negative(c.gm),
        "zeta_end" => positive(c.zeta_end),
        "samples" if c.samples < 2 => Err(format!("must be >= 2, got {}", c.samples)),
        "quad_nodes" if c.quad_nodes == 0 => Err("must be >= 1".into()),
        "rel_tol" => tolerance(c.rel_tol),
        "abs_tol" => tolerance(c.abs_tol),
        _ => Ok(()),
    }
}

/// One `key = value` assignment with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

/// Split a configuration document into assignments.
pub fn parse_lines(text: &str) -> Result<Vec<Assignment>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_error(
                None,
                Some(&origin),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        out.push(Assignment {
            key: key.trim().to_owned(),
            value: value.trim().to_owned(),
            origin,
        });
    }
    Ok(out)
}

/// Parse a `key=value` command-line override.
pub fn parse_override(arg: &str) -> Result<Assignment, ConfigError> {
    let origin = Origin::Argument(arg.to_owned());
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| config_error(None, Some(&origin), "expected `key=value`"))?;
    Ok(Assignment {
        key: key.trim().to_owned(),
        value: value.trim().to_owned(),
        origin,
    })
}

/// Build a validated configuration from assignments, applying the preset
/// first and rejecting repeated keys.
/// Command-line arguments override file lines; within one source a key may
/// appear only once.
pub fn build_config(assignments: &[Assignment]) -> Result<RunConfig, ConfigError> {
    let same_source = |a: &Origin, b: &Origin| {
        matches!(
            (a, b),
            (Origin::Line(_), Origin::Line(_)) | (Origin::Argument(_), Origin::Argument(_))
        )
    };
    let mut seen: Vec<(&str, &Origin)> = Vec::new();
    for a in assignments {
        if let Some((_, first)) = seen
            .iter()
            .find(|(k, o)| *k == a.key && same_source(o, &a.origin))
        {
            return Err(config_error(
                Some(&a.key),
                Some(&a.origin),
                format!("already set at {first}"),
            ));
        }
        seen.push((&a.key, &a.origin));
    }
    let mut config = match assignments.iter().rfind(|a| a.key == "preset") {
        Some(a) => {
            if !PRESET_NAMES.contains(&a.value.as_str()) {
                return Err(config_error(
                    Some("preset"),
                    Some(&a.origin),
                    format!(
                        "unknown preset `{}` (available: {})",
                        a.value,
                        PRESET_NAMES.join(", ")
                    ),
                ));
            }
            RunConfig::from_preset(&a.value)?
        }
        None => RunConfig {
            preset: None,
            sweep: None,
            ..RunConfig::default()
        },
    };
    for a in assignments.iter().filter(|a| a.key != "preset") {
        config.set(&a.key, &a.value, &a.origin)?;
    }
    config.medium()?;
    Ok(config)
}

/// Parse a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    build_config(&parse_lines(text)?)
}
