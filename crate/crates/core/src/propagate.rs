//! Propagation of the two optical waves through the medium.
//!
//! The state is the pair of complex amplitudes `a_n = g_n e^{i phi_n}`.
//! Splitting `da_n/dzeta = -i conj(sigma_3n) e^{i phi_n}` into modulus and
//! phase gives `dg_n/dzeta = -Im sigma_3n` and
//! `g_n dphi_n/dzeta = -Re sigma_3n`, but the complex form stays regular
//! where an amplitude vanishes. A wave that enters with zero amplitude is
//! generated from exactly zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doppler::{averaged_polarization, AveragedPolarization, VelocityQuadrature};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{phase_of, wrap_phase, AtomMedium, DriveFields};
use crate::ode::{self, Stats, Tolerances};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub zeta_end: f64,
    /// Number of equally spaced output points, endpoints included.
    pub sample_count: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub quadrature: VelocityQuadrature,
    /// Fields at the entrance. Microwave amplitude, phase and the detunings
    /// stay fixed along the cell.
    pub initial: DriveFields,
    pub execution: Execution,
}

impl PropagationConfig {
    pub fn new(
        initial: DriveFields,
        quadrature: VelocityQuadrature,
        zeta_end: f64,
        sample_count: usize,
    ) -> Self {
        PropagationConfig {
            zeta_end,
            sample_count,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            quadrature,
            initial,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_end.is_finite() && self.zeta_end > 0.0) {
            return Err(Error::domain(format!(
                "zeta_end must be positive, got {}",
                self.zeta_end
            )));
        }
        if self.sample_count < 2 {
            return Err(Error::domain(
                "at least two samples (both endpoints) are required",
            ));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::domain(format!(
                    "{name} must lie in (0, 1e-2], got {tol}"
                )));
            }
        }
        self.initial.validate()?;
        if self.initial.g0sq() == 0.0 {
            return Err(Error::domain("no optical power at the entrance"));
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
        }
    }
}

/// Everything the right-hand side needs besides the amplitudes.
#[derive(Debug, Clone, Copy)]
pub struct PropagationContext<'a> {
    pub medium: &'a AtomMedium,
    /// Supplies `gm`, `chi_m` and the detunings; amplitudes are ignored.
    pub fields: &'a DriveFields,
    pub quadrature: &'a VelocityQuadrature,
    pub execution: Execution,
}

/// `d a_n / d zeta` from a velocity-averaged polarization.
pub fn field_derivatives(
    a1: Complex64,
    a2: Complex64,
    pol: &AveragedPolarization,
) -> (Complex64, Complex64) {
    let d = |a: Complex64, sigma: Complex64| {
        -Complex64::i() * sigma.conj() * Complex64::from_polar(1.0, phase_of(a))
    };
    (d(a1, pol.sigma31), d(a2, pol.sigma32))
}

/// Right-hand side of the propagation equations. `zeta` is accepted for
/// signature symmetry; the medium is homogeneous.
pub fn propagation_rhs(
    _zeta: f64,
    a1: Complex64,
    a2: Complex64,
    ctx: &PropagationContext<'_>,
) -> Result<(Complex64, Complex64)> {
    let fields = ctx.fields.with_amplitudes(a1, a2);
    let pol = averaged_polarization(ctx.medium, &fields, ctx.quadrature, ctx.execution)?;
    Ok(field_derivatives(a1, a2, &pol))
}

/// Propagation invariant `g1 g2 cos(Phi)` of the resonant lossless medium.
pub fn motion_constant(a1: Complex64, a2: Complex64, chi_m: f64) -> f64 {
    (a1 * a2.conj() * Complex64::from_polar(1.0, -chi_m)).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub zeta: f64,
    pub a1: Complex64,
    pub a2: Complex64,
    pub i31_rel: f64,
    pub i32_rel: f64,
    pub phi_wrapped: f64,
    pub phi_unwrapped: f64,
    pub g0sq: f64,
    pub rho33_avg: f64,
    pub motion_const: f64,
}

/// A located extremum of the generated intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub zeta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationTrace {
    pub samples: Vec<TraceSample>,
    /// `|a1(0)|^2`, the normalization of both relative intensities.
    pub input_intensity: f64,
    pub stats: Stats,
}

impl PropagationTrace {
    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("trace has at least two samples")
    }

    /// First local maximum of `I32/I0`, refined by a parabola through the
    /// neighbouring samples. Falls back to the last sample if the generated
    /// intensity is still growing at the end of the cell.
    pub fn first_generated_maximum(&self) -> Peak {
        self.interior_maximum().unwrap_or_else(|| {
            let s = self.last();
            Peak {
                zeta: s.zeta,
                value: s.i32_rel,
            }
        })
    }

    /// First local maximum of `I32/I0` strictly inside the trace, if any.
    pub fn interior_maximum(&self) -> Option<Peak> {
        let v: Vec<f64> = self.samples.iter().map(|s| s.i32_rel).collect();
        (1..v.len().saturating_sub(1))
            .find(|&i| v[i] >= v[i - 1] && v[i] > v[i + 1])
            .map(|i| self.refine(i, &v))
    }

    /// Global maximum of `I32/I0` over the trace, refined like
    /// [`first_generated_maximum`](Self::first_generated_maximum).
    pub fn max_generated(&self) -> Peak {
        let v: Vec<f64> = self.samples.iter().map(|s| s.i32_rel).collect();
        let i = (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best });
        if i == 0 || i == v.len() - 1 {
            return Peak {
                zeta: self.samples[i].zeta,
                value: v[i],
            };
        }
        self.refine(i, &v)
    }

    fn refine(&self, i: usize, v: &[f64]) -> Peak {
        let h = self.samples[i + 1].zeta - self.samples[i].zeta;
        let (l, c, r) = (v[i - 1], v[i], v[i + 1]);
        let curvature = l - 2.0 * c + r;
        if curvature >= 0.0 {
            return Peak {
                zeta: self.samples[i].zeta,
                value: c,
            };
        }
        let offset = 0.5 * (l - r) / curvature;
        Peak {
            zeta: self.samples[i].zeta + offset * h,
            value: c - 0.25 * (l - r) * offset,
        }
    }
}

fn pack(a1: Complex64, a2: Complex64) -> [f64; 4] {
    [a1.re, a1.im, a2.re, a2.im]
}

fn unpack(y: &[f64; 4]) -> (Complex64, Complex64) {
    (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]))
}

/// Integrate the field equations from the entrance to `zeta_end`.
pub fn integrate_propagation(
    cfg: &PropagationConfig,
    medium: &AtomMedium,
) -> Result<PropagationTrace> {
    cfg.validate()?;
    medium.validate()?;
    let ctx = PropagationContext {
        medium,
        fields: &cfg.initial,
        quadrature: &cfg.quadrature,
        execution: cfg.execution,
    };
    let n = cfg.sample_count;
    let zetas: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                cfg.zeta_end
            } else {
                cfg.zeta_end * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let rhs = |zeta: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let (a1, a2) = unpack(y);
        let (d1, d2) = propagation_rhs(zeta, a1, a2, &ctx)?;
        Ok(pack(d1, d2))
    };
    let (states, stats) = ode::integrate(
        rhs,
        0.0,
        pack(cfg.initial.a1, cfg.initial.a2),
        cfg.zeta_end,
        &zetas,
        cfg.tolerances(),
    )?;

    let input_intensity = if cfg.initial.a1.norm_sqr() > 0.0 {
        cfg.initial.a1.norm_sqr()
    } else {
        cfg.initial.g0sq()
    };
    let chi_m = cfg.initial.chi_m;
    let mut samples = Vec::with_capacity(n);
    let mut unwrapped = 0.0;
    for (i, (&zeta, y)) in zetas.iter().zip(&states).enumerate() {
        let (a1, a2) = unpack(y);
        let fields = cfg.initial.with_amplitudes(a1, a2);
        let pol = averaged_polarization(medium, &fields, &cfg.quadrature, cfg.execution).map_err(
            |e| Error::Integration {
                zeta,
                reason: e.to_string(),
            },
        )?;
        let (d1, d2) = field_derivatives(a1, a2, &pol);
        // A vanishing amplitude takes the phase it is about to acquire.
        let phase = |a: Complex64, d: Complex64| {
            if a.norm_sqr() == 0.0 {
                phase_of(d)
            } else {
                a.arg()
            }
        };
        let wrapped = wrap_phase(phase(a1, d1) - phase(a2, d2) - chi_m);
        if i == 0 {
            unwrapped = wrapped;
        } else {
            let prev: &TraceSample = &samples[i - 1];
            let mut step = wrapped - prev.phi_wrapped;
            step -= 2.0 * PI * (step / (2.0 * PI)).round();
            unwrapped += step;
        }
        samples.push(TraceSample {
            zeta,
            a1,
            a2,
            i31_rel: a1.norm_sqr() / input_intensity,
            i32_rel: a2.norm_sqr() / input_intensity,
            phi_wrapped: wrapped,
            phi_unwrapped: unwrapped,
            g0sq: a1.norm_sqr() + a2.norm_sqr(),
            rho33_avg: pol.rho33,
            motion_const: motion_constant(a1, a2, chi_m),
        });
    }
    Ok(PropagationTrace {
        samples,
        input_intensity,
        stats,
    })
}
