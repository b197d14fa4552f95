//! Steady state of the closed-loop three-level Lambda atom.
//!
//! The master equation is written in a frame rotating with the three
//! fields. With `hbar = gamma31 = 1` the Hamiltonian is
//!
//! ```text
//! H = d1 |1><1| + d2 |2><2|
//!     - (a1 |1><3| + a2 |2><3| + gm e^{i chi_m} |1><2| + h.c.)
//! ```
//!
//! where `d_n = Delta_3n - k_3n vz / gamma31` are the Doppler-shifted
//! detunings. Relaxation consists of spontaneous decay of `|3>` into `|1>`
//! (rate 1) and `|2>` (rate `gamma32`) plus pure dephasing of the ground
//! coherence at rate `Gamma`.
//!
//! The equations are vectorized over the nine real parameters of a
//! Hermitian 3x3 matrix, the `rho11` equation is replaced by the trace
//! condition, and the resulting dense system is inverted directly. The
//! inverse gives both the solution and a 1-norm condition estimate.

use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{phase_of, AtomMedium, DriveFields, SteadyState};

type C64 = Complex64;
type M3 = [[C64; 3]; 3];
type System = SMatrix<f64, 9, 9>;

/// Solves whose 1-norm condition estimate exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// One velocity class of a medium driven by a set of fields.
#[derive(Debug, Clone, Copy)]
pub struct BlochContext<'a> {
    pub medium: &'a AtomMedium,
    pub fields: &'a DriveFields,
    /// Velocity along the propagation axis (m/s).
    pub vz: f64,
}

impl<'a> BlochContext<'a> {
    pub fn new(medium: &'a AtomMedium, fields: &'a DriveFields, vz: f64) -> Self {
        BlochContext { medium, fields, vz }
    }

    /// Detunings of `|1>` and `|2>` seen by this velocity class.
    pub fn effective_detunings(&self) -> (f64, f64) {
        let (s31, s32) = self.medium.doppler_shifts(self.vz);
        (self.fields.delta31 - s31, self.fields.delta32() - s32)
    }
}

fn hamiltonian(fields: &DriveFields, d1: f64, d2: f64) -> M3 {
    let mw = fields.gm * C64::from_polar(1.0, fields.chi_m);
    let mut h = [[ZERO; 3]; 3];
    h[0][0] = C64::new(d1, 0.0);
    h[1][1] = C64::new(d2, 0.0);
    h[0][2] = -fields.a1;
    h[2][0] = -fields.a1.conj();
    h[1][2] = -fields.a2;
    h[2][1] = -fields.a2.conj();
    h[0][1] = -mw;
    h[1][0] = -mw.conj();
    h
}

// Real coordinates: rho11, rho22, rho33, Re/Im rho21, Re/Im rho31, Re/Im rho32.
const OFF_DIAGONAL: [(usize, usize); 3] = [(1, 0), (2, 0), (2, 1)];

fn to_matrix(x: &[f64; 9]) -> M3 {
    let mut m = [[ZERO; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(x[i], 0.0);
    }
    for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
        let z = C64::new(x[3 + 2 * k], x[4 + 2 * k]);
        m[r][c] = z;
        m[c][r] = z.conj();
    }
    m
}

fn from_matrix(m: &M3) -> [f64; 9] {
    let mut x = [0.0; 9];
    for (i, xi) in x.iter_mut().take(3).enumerate() {
        *xi = m[i][i].re;
    }
    for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
        x[3 + 2 * k] = m[r][c].re;
        x[4 + 2 * k] = m[r][c].im;
    }
    x
}

struct Relaxation {
    gamma32: f64,
    dephasing: f64,
}

fn liouvillian(h: &M3, relax: &Relaxation, rho: &M3) -> M3 {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = ZERO;
            for k in 0..3 {
                acc += h[i][k] * rho[k][j] - rho[i][k] * h[k][j];
            }
            out[i][j] = -I * acc;
        }
    }
    let total = 1.0 + relax.gamma32;
    out[2][2] -= total * rho[2][2];
    out[0][0] += rho[2][2];
    out[1][1] += relax.gamma32 * rho[2][2];
    for (r, c) in [(2, 0), (2, 1)] {
        out[r][c] -= 0.5 * total * rho[r][c];
        out[c][r] -= 0.5 * total * rho[c][r];
    }
    out[1][0] -= relax.dephasing * rho[1][0];
    out[0][1] -= relax.dephasing * rho[0][1];
    out
}

fn one_norm(m: &System) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve for the steady state and return the raw real coordinates
/// together with the condition estimate.
fn solve_coordinates(h: &M3, relax: &Relaxation) -> Result<([f64; 9], f64)> {
    let mut system = System::zeros();
    for k in 0..9 {
        let mut e = [0.0; 9];
        e[k] = 1.0;
        let col = from_matrix(&liouvillian(h, relax, &to_matrix(&e)));
        for (r, v) in col.iter().enumerate() {
            system[(r, k)] = *v;
        }
    }
    for k in 0..9 {
        system[(0, k)] = if k < 3 { 1.0 } else { 0.0 };
    }
    let inverse = system
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("steady-state system is singular".into()))?;
    let condition = one_norm(&system) * one_norm(&inverse);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition });
    }
    let mut x = [0.0; 9];
    for (r, xr) in x.iter_mut().enumerate() {
        *xr = inverse[(r, 0)];
    }
    Ok((x, condition))
}

/// Unique steady state of one velocity class.
pub fn solve_steady(ctx: &BlochContext<'_>) -> Result<SteadyState> {
    let fields = ctx.fields;
    fields.validate()?;
    if fields.g1() == 0.0 && fields.g2() == 0.0 && fields.gm == 0.0 {
        return Err(Error::Degenerate("no field couples the levels".into()));
    }
    if !ctx.vz.is_finite() {
        return Err(Error::domain("velocity must be finite"));
    }
    let (d1, d2) = ctx.effective_detunings();
    let h = hamiltonian(fields, d1, d2);
    let relax = Relaxation {
        gamma32: ctx.medium.gamma32_rel,
        dephasing: ctx.medium.ground_decay_rel,
    };
    let (x, condition) = solve_coordinates(&h, &relax)?;
    let rho = to_matrix(&x);
    Ok(SteadyState {
        rho11: x[0],
        rho22: x[1],
        rho33: x[2],
        sigma21: rho[1][0] * C64::from_polar(1.0, fields.chi_m),
        sigma31: rho[2][0] * C64::from_polar(1.0, phase_of(fields.a1)),
        sigma32: rho[2][1] * C64::from_polar(1.0, phase_of(fields.a2)),
        condition,
    })
}

/// Optical coherences and excited population from the closed-form
/// resonant solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantCoherences {
    pub sigma31: C64,
    pub sigma32: C64,
    pub rho33: f64,
}

/// Which form of the common denominator `L` to use.
///
/// The historically printed form carries a `3 (g1^2 - g2^2)` term in the
/// `gm^2` bracket; the exact steady state requires `3 (g1^2 - g2^2)^2`. The
/// two agree whenever `g1 = g2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Denominator {
    #[default]
    Exact,
    AsPrinted,
}

/// Common denominator of the closed-form resonant solution.
pub fn resonant_denominator(g1: f64, g2: f64, gm: f64, phi: f64, form: Denominator) -> f64 {
    let (g1s, g2s, gms) = (g1 * g1, g2 * g2, gm * gm);
    let g0s = g1s + g2s;
    let s2 = phi.sin().powi(2);
    let diff = g1s - g2s;
    let bracket_diff = match form {
        Denominator::Exact => diff * diff,
        Denominator::AsPrinted => diff,
    };
    0.5 * g0s.powi(3)
        + gms * (3.0 * bracket_diff - 2.0 * g0s * g0s + 2.0 * g0s + 12.0 * g1s * g2s * s2)
        + 2.0 * g0s * gms * gms
}

/// Closed-form steady state for resonant fields, `Gamma = 0`, `vz = 0` and
/// equal branching. The caller is responsible for those conditions; only
/// the amplitudes, `gm` and the loop phase are read from `fields`.
pub fn closed_form_resonant(fields: &DriveFields) -> Result<ResonantCoherences> {
    closed_form_resonant_with(fields, Denominator::Exact)
}

pub fn closed_form_resonant_with(
    fields: &DriveFields,
    form: Denominator,
) -> Result<ResonantCoherences> {
    fields.validate()?;
    let (g1, g2, gm) = (fields.g1(), fields.g2(), fields.gm);
    let g0s = g1 * g1 + g2 * g2;
    if g0s == 0.0 {
        return Err(Error::Degenerate(
            "closed form needs a non-zero optical field".into(),
        ));
    }
    let phi = fields.loop_phase();
    let (s, c) = phi.sin_cos();
    let l = resonant_denominator(g1, g2, gm, phi, form);
    let (g1s, g2s, gms) = (g1 * g1, g2 * g2, gm * gm);
    let diff = g1s - g2s;
    let lead = gm * g0s * (g0s - 2.0 * gms) / (2.0 * l);
    let im31 = -g2 * lead * s + gms * g1 * (diff + 2.0 * g2s * s * s) / l;
    let im32 = g1 * lead * s - gms * g2 * (diff - 2.0 * g1s * s * s) / l;
    let lead_re = gm * diff * (g0s - 2.0 * gms) / (2.0 * l);
    let sin2 = (2.0 * phi).sin();
    let re31 = g2 * lead_re * c + gms * g1 * g2s / l * sin2;
    let re32 = -g1 * lead_re * c - gms * g1s * g2 / l * sin2;
    let rho33 = gms * (diff * diff + 4.0 * g1s * g2s * s * s) / l;
    Ok(ResonantCoherences {
        sigma31: C64::new(re31, im31),
        sigma32: C64::new(re32, im32),
        rho33,
    })
}

/// Population of the dark superposition of the two ground states.
///
/// With `sigma21` referenced to the microwave phase, the dark state is
/// `(g2 |1> - e^{-i Phi} g1 |2>) / g0` and its population is
/// `(g2^2 rho11 + g1^2 rho22 - 2 g1 g2 Re(sigma21 e^{i Phi})) / g0^2`.
pub fn dark_state_population(fields: &DriveFields, state: &SteadyState) -> Result<f64> {
    let (g1, g2) = (fields.g1(), fields.g2());
    let g0s = g1 * g1 + g2 * g2;
    if g0s == 0.0 {
        return Err(Error::domain(
            "dark state is undefined without optical fields",
        ));
    }
    let phase = C64::from_polar(1.0, fields.loop_phase());
    Ok(
        (g2 * g2 * state.rho11 + g1 * g1 * state.rho22
            - 2.0 * g1 * g2 * (state.sigma21 * phase).re)
            / g0s,
    )
}

/// Ground-state populations and coherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub rho11: f64,
    pub rho22: f64,
    pub sigma21: C64,
}

/// Ground state to first order in a weak microwave field (resonant, ideal
/// medium).
pub fn weak_field_ground_state(fields: &DriveFields) -> Result<GroundState> {
    let (g1, g2, gm) = (fields.g1(), fields.g2(), fields.gm);
    let g0s = g1 * g1 + g2 * g2;
    if g0s == 0.0 {
        return Err(Error::domain(
            "weak-field expansion needs a non-zero optical field",
        ));
    }
    let (s, c) = fields.loop_phase().sin_cos();
    let mix = g1 * g2 / g0s;
    let shift = 2.0 * gm * g1 * g2 * s / (g0s * g0s);
    Ok(GroundState {
        rho11: g2 * g2 / g0s - shift,
        rho22: g1 * g1 / g0s + shift,
        sigma21: C64::new(-mix * c, mix * s - gm * (g1 * g1 - g2 * g2) / (g0s * g0s)),
    })
}
