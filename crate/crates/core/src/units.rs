//! Conversions between laboratory units and the dimensionless variables used
//! throughout the crate (rates and detunings in units of `gamma31`, Rabi
//! frequencies `g = dE / 2 hbar gamma31`, optical depth `zeta`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Intensity per unit `g^2`: `2 hbar omega^3 gamma / (3 pi c^2)`.
fn intensity_scale(omega: f64, gamma: f64, calibration: f64) -> Result<f64> {
    check_positive("omega", omega)?;
    check_positive("gamma", gamma)?;
    check_positive("calibration", calibration)?;
    Ok(2.0 * HBAR * omega.powi(3) * gamma / (3.0 * PI * SPEED_OF_LIGHT.powi(2)) * calibration)
}

/// Optical intensity (W/m^2) of a wave with dimensionless Rabi frequency `g`.
///
/// `calibration` rescales the dipole-limited relation; pass `1.0` for the bare
/// formula.
pub fn rabi_to_intensity(g: f64, omega: f64, gamma: f64, calibration: f64) -> Result<f64> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::domain(format!(
            "Rabi frequency must be >= 0, got {g}"
        )));
    }
    Ok(intensity_scale(omega, gamma, calibration)? * g * g)
}

/// Inverse of [`rabi_to_intensity`].
pub fn intensity_to_rabi(intensity: f64, omega: f64, gamma: f64, calibration: f64) -> Result<f64> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::domain(format!(
            "intensity must be >= 0, got {intensity}"
        )));
    }
    Ok((intensity / intensity_scale(omega, gamma, calibration)?).sqrt())
}

/// Resonant absorption cross-section `3 pi c^2 / (2 omega^2)` (m^2).
pub fn resonant_cross_section(omega31: f64) -> Result<f64> {
    check_positive("omega31", omega31)?;
    Ok(3.0 * PI * SPEED_OF_LIGHT.powi(2) / (2.0 * omega31 * omega31))
}

/// Physical length (m) corresponding to optical depth `zeta`.
pub fn zeta_to_length(zeta: f64, density: f64, omega31: f64) -> Result<f64> {
    check_positive("density", density)?;
    Ok(zeta / (resonant_cross_section(omega31)? * density))
}

/// Optical depth of a cell of length `z` (m).
pub fn length_to_zeta(z: f64, density: f64, omega31: f64) -> Result<f64> {
    check_positive("density", density)?;
    Ok(z * resonant_cross_section(omega31)? * density)
}

/// Most probable speed `sqrt(2 kB T / m)` of a Maxwell-Boltzmann gas (m/s).
pub fn most_probable_speed(temperature: f64, mass: f64) -> Result<f64> {
    check_positive("mass", mass)?;
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::domain(format!(
            "temperature must be >= 0, got {temperature}"
        )));
    }
    Ok((2.0 * BOLTZMANN * temperature / mass).sqrt())
}

/// Angular frequency of light with vacuum wavelength `lambda` (m).
pub fn wavelength_to_angular(lambda: f64) -> Result<f64> {
    check_positive("wavelength", lambda)?;
    Ok(2.0 * PI * SPEED_OF_LIGHT / lambda)
}
