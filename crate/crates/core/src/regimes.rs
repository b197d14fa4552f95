//! Perturbative predictors for the weak (CPT) and strong (Autler-Townes)
//! microwave regimes, with their applicability conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtomMedium, DriveFields};

/// Weak-regime guard: `gm < WEAK_GUARD * g0`.
pub const WEAK_GUARD: f64 = 0.2;
/// Strong-regime guard: `gm > STRONG_GUARD * max(1, g0)`.
pub const STRONG_GUARD: f64 = 5.0;
/// Loss at the conversion maximum above which the oscillation and the
/// dissipation are no longer considered well separated.
pub const SEPARATION_LOSS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `gm << 1, g0`: coherent population trapping.
    Weak,
    /// `gm >> 1, g0`: microwave-dressed levels.
    Strong,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(Regime::Weak),
            "strong" => Ok(Regime::Strong),
            other => Err(Error::domain(format!(
                "unknown regime `{other}` (expected weak or strong)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimePrediction {
    pub regime: Regime,
    pub zeta_period: f64,
    pub zeta_max: f64,
    /// Fraction of the input optical power lost at `zeta_max`.
    pub loss_at_max: f64,
    /// Ratio to the regime guard; above 1 the guard holds.
    pub validity_margin: f64,
    /// `Delta32 == Delta31`, i.e. no microwave detuning.
    pub two_photon_resonant: bool,
    /// Oscillation period short compared with the dissipation length.
    pub scales_separated: bool,
}

/// Intensities along the cell from a closed-form profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub g1sq: f64,
    pub g2sq: f64,
    pub g0sq: f64,
}

fn check_inputs(g0sq_in: f64, gm: f64) -> Result<()> {
    if !(g0sq_in.is_finite() && g0sq_in > 0.0) {
        return Err(Error::domain(format!(
            "input optical intensity must be positive, got {g0sq_in}"
        )));
    }
    if !(gm.is_finite() && gm > 0.0) {
        return Err(Error::domain(format!(
            "microwave Rabi frequency must be positive, got {gm}"
        )));
    }
    Ok(())
}

fn guard_margin(regime: Regime, g0sq: f64, gm: f64) -> f64 {
    let g0 = g0sq.sqrt();
    match regime {
        Regime::Weak => WEAK_GUARD * g0 / gm,
        Regime::Strong => gm / (STRONG_GUARD * g0.max(1.0)),
    }
}

fn check_guard(regime: Regime, g0sq: f64, gm: f64) -> Result<()> {
    let margin = guard_margin(regime, g0sq, gm);
    if margin > 1.0 {
        return Ok(());
    }
    let g0 = g0sq.sqrt();
    Err(Error::Applicability(match regime {
        Regime::Weak => format!(
            "weak regime needs gm < {WEAK_GUARD} g0 = {}, got gm = {gm}",
            WEAK_GUARD * g0
        ),
        Regime::Strong => {
            format!(
                "strong regime needs gm > {STRONG_GUARD} max(1, g0) = {}, got gm = {gm}",
                STRONG_GUARD * g0.max(1.0)
            )
        }
    }))
}

/// Length beyond which the weak-regime power law leaves nothing.
pub fn weak_exhaustion_length(g0sq_in: f64, gm: f64) -> f64 {
    g0sq_in * g0sq_in / (8.0 * gm * gm)
}

/// Total optical intensity in the weak regime, `g0^4 = g0^4(0) - 8 gm^2 zeta`.
pub fn weak_total_intensity(g0sq_in: f64, gm: f64, zeta: f64) -> Result<f64> {
    check_inputs(g0sq_in, gm)?;
    let limit = weak_exhaustion_length(g0sq_in, gm);
    if zeta > limit {
        return Err(Error::DissipationExhausted { zeta_limit: limit });
    }
    Ok((g0sq_in * g0sq_in - 8.0 * gm * gm * zeta).sqrt())
}

/// Weak-regime profile with the oscillation argument `gm zeta / g0^2(0)`
/// and the local total intensity as prefactor.
pub fn weak_field_profile(g0sq_in: f64, gm: f64, zeta: f64) -> Result<Profile> {
    check_guard(Regime::Weak, g0sq_in, gm)?;
    let g0sq = weak_total_intensity(g0sq_in, gm, zeta)?;
    let theta = gm * zeta / g0sq_in;
    Ok(split(g0sq, theta))
}

/// Weak-regime profile with the oscillation phase accumulated along the
/// decaying intensity, `theta = int gm / g0^2 dzeta = (g0^2(0) - g0^2) / (4 gm)`.
/// Reduces to [`weak_field_profile`] while the decay is negligible.
pub fn weak_field_profile_adiabatic(g0sq_in: f64, gm: f64, zeta: f64) -> Result<Profile> {
    check_guard(Regime::Weak, g0sq_in, gm)?;
    let g0sq = weak_total_intensity(g0sq_in, gm, zeta)?;
    let theta = (g0sq_in - g0sq) / (4.0 * gm);
    Ok(split(g0sq, theta))
}

/// Strong-regime profile: exponential loss, oscillation at `zeta / (2 gm)`.
pub fn strong_field_profile(g0sq_in: f64, gm: f64, zeta: f64) -> Result<Profile> {
    check_inputs(g0sq_in, gm)?;
    check_guard(Regime::Strong, g0sq_in, gm)?;
    if !(zeta.is_finite() && zeta >= 0.0) {
        return Err(Error::domain(format!("zeta must be >= 0, got {zeta}")));
    }
    let g0sq = g0sq_in * (-zeta / (gm * gm)).exp();
    Ok(split(g0sq, zeta / (2.0 * gm)))
}

fn split(g0sq: f64, theta: f64) -> Profile {
    let (s, c) = theta.sin_cos();
    Profile {
        g1sq: g0sq * c * c,
        g2sq: g0sq * s * s,
        g0sq,
    }
}

/// Length of the first conversion maximum.
pub fn optimal_length(regime: Regime, g0sq_in: f64, gm: f64) -> Result<f64> {
    check_inputs(g0sq_in, gm)?;
    check_guard(regime, g0sq_in, gm)?;
    Ok(match regime {
        Regime::Weak => PI * g0sq_in / (2.0 * gm),
        Regime::Strong => PI * gm,
    })
}

/// Full prediction for the entrance fields.
pub fn predict(regime: Regime, fields: &DriveFields) -> Result<RegimePrediction> {
    fields.validate()?;
    let (g0sq, gm) = (fields.g0sq(), fields.gm);
    let zeta_max = optimal_length(regime, g0sq, gm)?;
    let loss_at_max = match regime {
        Regime::Weak => match weak_total_intensity(g0sq, gm, zeta_max) {
            Ok(left) => 1.0 - left / g0sq,
            Err(Error::DissipationExhausted { .. }) => 1.0,
            Err(e) => return Err(e),
        },
        Regime::Strong => 1.0 - (-PI / gm).exp(),
    };
    Ok(RegimePrediction {
        regime,
        zeta_period: 2.0 * zeta_max,
        zeta_max,
        loss_at_max,
        validity_margin: guard_margin(regime, g0sq, gm),
        two_photon_resonant: fields.delta32() == fields.delta31,
        scales_separated: loss_at_max < SEPARATION_LOSS,
    })
}

/// How well ground-state relaxation is outpaced by optical pumping;
/// values much larger than one mean population trapping holds.
///
/// At zero common detuning in a Doppler-broadened vapour the Doppler width
/// replaces the homogeneous detuning factor.
pub fn cpt_condition_margin(medium: &AtomMedium, g0sq: f64, delta: f64) -> Result<f64> {
    medium.validate()?;
    if !(g0sq.is_finite() && g0sq >= 0.0 && delta.is_finite()) {
        return Err(Error::domain("g0sq must be >= 0 and delta finite"));
    }
    if medium.ground_decay_rel == 0.0 {
        return Ok(f64::INFINITY);
    }
    let kvp = medium.doppler_width();
    let spread = if delta == 0.0 && kvp >= 1.0 {
        kvp * kvp
    } else {
        1.0 + delta * delta
    };
    Ok(g0sq / (medium.ground_decay_rel * spread))
}

/// Width of the generation line against microwave detuning, in units of
/// `gamma31`.
pub fn black_line_width(medium: &AtomMedium, g0sq: f64) -> Result<f64> {
    medium.validate()?;
    let kvp = medium.doppler_width();
    if kvp < 1.0 {
        return Err(Error::Applicability(format!(
            "line width estimate needs a Doppler width >= 1, got {kvp}"
        )));
    }
    if !(g0sq.is_finite() && g0sq >= 0.0) {
        return Err(Error::domain(format!("g0sq must be >= 0, got {g0sq}")));
    }
    Ok(g0sq / (kvp * kvp))
}

/// Second-order absorption `(Im sigma31, Im sigma32)` for resonant ideal
/// fields.
pub fn perturbative_absorption(regime: Regime, fields: &DriveFields) -> Result<(f64, f64)> {
    fields.validate()?;
    let (g1, g2, gm) = (fields.g1(), fields.g2(), fields.gm);
    let g0s = g1 * g1 + g2 * g2;
    if g0s == 0.0 {
        return Err(Error::domain(
            "absorption is undefined without optical fields",
        ));
    }
    check_guard(regime, g0s, gm)?;
    let s = fields.loop_phase().sin();
    let diff = g1 * g1 - g2 * g2;
    let b1 = g1 * (diff + 2.0 * g2 * g2 * s * s);
    let b2 = g2 * (diff - 2.0 * g1 * g1 * s * s);
    Ok(match regime {
        Regime::Weak => {
            let g0_6 = g0s.powi(3);
            (
                -g2 * gm / g0s * s + 2.0 * gm * gm * b1 / g0_6,
                g1 * gm / g0s * s - 2.0 * gm * gm * b2 / g0_6,
            )
        }
        Regime::Strong => {
            let q = 2.0 * gm * gm * g0s;
            (g2 / (2.0 * gm) * s + b1 / q, -g1 / (2.0 * gm) * s - b2 / q)
        }
    })
}

/// Least-squares slope of `log err` against `log x`.
pub fn observed_order(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, e)| (x.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
