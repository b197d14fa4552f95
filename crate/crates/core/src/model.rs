//! Domain types shared by the solver, the Doppler average and the
//! propagation code.
//!
//! Every rate and detuning is dimensionless, measured in units of the
//! `|3> -> |1>` spontaneous rate `gamma31`. Only [`AtomMedium`] carries
//! laboratory quantities (SI units), and those are used solely to form
//! Doppler shifts and unit conversions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Static parameters of the atomic medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomMedium {
    /// Spontaneous rate `|3> -> |1>` (s^-1); the unit of every dimensionless rate.
    pub gamma31: f64,
    /// Spontaneous rate `|3> -> |2>` in units of `gamma31`.
    pub gamma32_rel: f64,
    /// Decay rate of the ground-state coherence in units of `gamma31`.
    pub ground_decay_rel: f64,
    /// Angular frequency of the `|1>-|3>` transition (rad/s).
    pub omega31: f64,
    /// Ground-state splitting (rad/s).
    pub omega21: f64,
    /// Wavevector of the pump wave (rad/m).
    pub k31: f64,
    /// Wavevector of the generated wave (rad/m).
    pub k32: f64,
    /// Number density of active atoms (m^-3).
    pub density: f64,
    /// Most probable thermal speed along the beam (m/s).
    pub vp: f64,
    /// Scale applied to the Rabi/intensity relation.
    pub intensity_calibration: f64,
}

/// Laboratory description of a medium, in the units an experimentalist
/// would quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabParameters {
    /// `gamma31 / 2 pi` (Hz).
    pub gamma31_hz: f64,
    pub gamma32_rel: f64,
    pub ground_decay_rel: f64,
    pub lambda31_nm: f64,
    /// `omega21 / 2 pi` (Hz).
    pub omega21_hz: f64,
    pub density_per_cm3: f64,
    pub temperature_k: f64,
    pub mass_amu: f64,
    /// Scale of the Rabi/intensity relation; `None` uses the sodium
    /// reference pair.
    pub intensity_calibration: Option<f64>,
}

/// Sodium D1 line, `3S1/2(F=1) - 3S1/2(F=2) - 3P1/2`, in a 440 K vapor cell.
pub const SODIUM_D1: LabParameters = LabParameters {
    gamma31_hz: 9.765e6,
    gamma32_rel: 1.0,
    ground_decay_rel: 1e-4,
    lambda31_nm: 589.6,
    omega21_hz: 1.771_626_129e9,
    density_per_cm3: 4.42e11,
    temperature_k: 440.0,
    mass_amu: 22.989_769_28,
    // g = 2.0 corresponds to 12.6 mW/cm^2
    intensity_calibration: None,
};

/// Pump intensity (W/m^2) that the sodium preset assigns to `g = 2.0`.
pub const SODIUM_REFERENCE_INTENSITY: f64 = 126.0;
pub const SODIUM_REFERENCE_RABI: f64 = 2.0;

/// The sodium D1 medium with its intensity calibration resolved.
pub fn sodium_d1() -> AtomMedium {
    AtomMedium::from_lab(&SODIUM_D1).expect("sodium preset is valid")
}

impl AtomMedium {
    /// Build a medium from laboratory parameters.
    pub fn from_lab(lab: &LabParameters) -> Result<Self> {
        let gamma31 = 2.0 * PI * lab.gamma31_hz;
        let omega31 = units::wavelength_to_angular(lab.lambda31_nm * 1e-9)?;
        let omega21 = 2.0 * PI * lab.omega21_hz;
        let vp =
            units::most_probable_speed(lab.temperature_k, lab.mass_amu * units::ATOMIC_MASS_UNIT)?;
        let intensity_calibration = match lab.intensity_calibration {
            Some(c) => c,
            None => {
                let bare = units::rabi_to_intensity(SODIUM_REFERENCE_RABI, omega31, gamma31, 1.0)?;
                SODIUM_REFERENCE_INTENSITY / bare
            }
        };
        let medium = AtomMedium {
            gamma31,
            gamma32_rel: lab.gamma32_rel,
            ground_decay_rel: lab.ground_decay_rel,
            omega31,
            omega21,
            k31: omega31 / units::SPEED_OF_LIGHT,
            k32: (omega31 - omega21) / units::SPEED_OF_LIGHT,
            density: lab.density_per_cm3 * 1e6,
            vp,
            intensity_calibration,
        };
        medium.validate()?;
        Ok(medium)
    }

    /// Resonant, motionless, dephasing-free medium with equal branching.
    /// The laboratory constants are those of sodium so that unit
    /// conversions remain meaningful.
    pub fn ideal() -> Self {
        AtomMedium {
            gamma32_rel: 1.0,
            ground_decay_rel: 0.0,
            vp: 0.0,
            ..sodium_d1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma31", self.gamma31),
            ("gamma32", self.gamma32_rel),
            ("omega31", self.omega31),
            ("k31", self.k31),
            ("k32", self.k32),
            ("density", self.density),
            ("intensity calibration", self.intensity_calibration),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("Gamma", self.ground_decay_rel),
            ("vp", self.vp),
            ("omega21", self.omega21),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.omega21 > 0.0 && self.k32 > self.k31 {
            return Err(Error::domain("k32 must not exceed k31 when omega21 > 0"));
        }
        Ok(())
    }

    /// The same medium with `k32` set equal to `k31`, so both optical
    /// transitions see an identical Doppler shift.
    pub fn with_equal_wavevectors(&self) -> Self {
        AtomMedium {
            k32: self.k31,
            ..self.clone()
        }
    }

    /// Doppler width `k31 vp / gamma31`.
    pub fn doppler_width(&self) -> f64 {
        self.k31 * self.vp / self.gamma31
    }

    /// Doppler shifts `(k31 vz, k32 vz)` in units of `gamma31`.
    pub fn doppler_shifts(&self, vz: f64) -> (f64, f64) {
        (self.k31 * vz / self.gamma31, self.k32 * vz / self.gamma31)
    }

    pub fn rabi_to_intensity(&self, g: f64) -> Result<f64> {
        units::rabi_to_intensity(g, self.omega31, self.gamma31, self.intensity_calibration)
    }

    pub fn zeta_to_length(&self, zeta: f64) -> Result<f64> {
        units::zeta_to_length(zeta, self.density, self.omega31)
    }
}

/// The three drive fields at one point of the medium.
///
/// The optical amplitudes `a_n = g_n e^{i phi_n}` are complex Rabi
/// frequencies. The loop phase is `Phi = arg a1 - arg a2 - chi_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveFields {
    pub a1: Complex64,
    pub a2: Complex64,
    /// Microwave Rabi frequency (>= 0).
    pub gm: f64,
    /// Phase of the microwave transition (rad).
    pub chi_m: f64,
    /// Pump detuning `Delta31`.
    pub delta31: f64,
    /// Microwave detuning `omega_m - omega21`.
    pub delta_m: f64,
}

impl DriveFields {
    /// Resonant fields with real amplitudes and the requested loop phase.
    pub fn resonant(g1: f64, g2: f64, gm: f64, phi: f64) -> Self {
        DriveFields {
            a1: Complex64::new(g1, 0.0),
            a2: Complex64::new(g2, 0.0),
            gm,
            chi_m: 0.0 - phi,
            delta31: 0.0,
            delta_m: 0.0,
        }
    }

    pub fn with_amplitudes(self, a1: Complex64, a2: Complex64) -> Self {
        DriveFields { a1, a2, ..self }
    }

    pub fn g1(&self) -> f64 {
        self.a1.norm()
    }

    pub fn g2(&self) -> f64 {
        self.a2.norm()
    }

    pub fn g0sq(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }

    /// Detuning of the generated wave; energy conservation fixes
    /// `omega32 = omega31 - omega_m`.
    pub fn delta32(&self) -> f64 {
        self.delta31 - self.delta_m
    }

    /// Loop phase wrapped to `(-pi, pi]`. A vanishing amplitude contributes
    /// phase zero.
    pub fn loop_phase(&self) -> f64 {
        wrap_phase(phase_of(self.a1) - phase_of(self.a2) - self.chi_m)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.a1.re,
            self.a1.im,
            self.a2.re,
            self.a2.im,
            self.gm,
            self.chi_m,
            self.delta31,
            self.delta_m,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("drive fields must be finite"));
        }
        if self.gm < 0.0 {
            return Err(Error::domain(format!(
                "microwave Rabi frequency must be >= 0, got {}",
                self.gm
            )));
        }
        Ok(())
    }
}

/// `arg z`, with `arg 0 = 0`.
pub fn phase_of(z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

/// Wrap to `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Steady-state density matrix of one velocity class.
///
/// `sigma31` and `sigma32` are referenced to the phase of their own optical
/// field, so `Im sigma3n > 0` means absorption of wave `n`. `sigma21` is
/// referenced to the microwave phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub sigma21: Complex64,
    pub sigma31: Complex64,
    pub sigma32: Complex64,
    /// 1-norm condition estimate of the linear system that produced it.
    pub condition: f64,
}

impl SteadyState {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22 + self.rho33
    }

    /// Checks trace, population bounds and the positivity bound on
    /// coherences.
    pub fn is_physical(&self) -> bool {
        let pops = [self.rho11, self.rho22, self.rho33];
        (self.trace() - 1.0).abs() <= 1e-12
            && pops.iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(p))
            && self.sigma21.norm_sqr() <= self.rho11 * self.rho22 + 1e-10
            && self.sigma31.norm_sqr() <= self.rho33 * self.rho11 + 1e-10
            && self.sigma32.norm_sqr() <= self.rho33 * self.rho22 + 1e-10
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sodium_preset_numbers() {
        let na = sodium_d1();
        assert!((na.vp - 564.0).abs() < 0.005 * 564.0);
        assert!(
            (na.doppler_width() - 97.7).abs() < 1.0,
            "{}",
            na.doppler_width()
        );
        assert!(na.k32 < na.k31);
        // 1e-4 gamma is about 1 kHz
        let gamma_hz = na.ground_decay_rel * na.gamma31 / (2.0 * PI);
        assert!((gamma_hz - 1e3).abs() < 50.0, "{gamma_hz}");
        assert!((na.density - 4.42e17).abs() < 1.0);
    }

    #[test]
    fn derived_detuning_and_phase() {
        let f = DriveFields {
            delta31: 3.0,
            delta_m: 0.5,
            ..DriveFields::resonant(1.0, 1.0, 0.1, 0.7)
        };
        assert_eq!(f.delta32(), 2.5);
        assert!((f.loop_phase() - 0.7).abs() < 1e-15);
        let shifted = DriveFields {
            chi_m: f.chi_m + 2.0 * PI,
            ..f
        };
        assert!((shifted.loop_phase() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_media_are_rejected() {
        let mut m = sodium_d1();
        m.k32 = 2.0 * m.k31;
        assert!(m.validate().is_err());
        let mut m = sodium_d1();
        m.ground_decay_rel = -1.0;
        assert!(m.validate().is_err());
        assert!(sodium_d1().with_equal_wavevectors().validate().is_ok());
    }

    #[test]
    fn negative_microwave_rejected() {
        assert!(DriveFields::resonant(1.0, 0.0, -0.1, 0.0)
            .validate()
            .is_err());
    }
}
