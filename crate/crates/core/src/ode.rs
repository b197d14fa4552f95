//! Dormand-Prince 5(4) with step-size control and the fourth-order
//! continuous extension for output at arbitrary abscissae.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` and return the solution at
/// each of `samples` (ascending, inside `[t0, t_end]`).
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    samples: &[f64],
    tol: Tolerances,
) -> Result<(Vec<[f64; N]>, Stats)>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if t_end.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::domain("integration interval must be non-empty"));
    }
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.iter().any(|&s| s < t0 || s > t_end) {
        return Err(Error::domain(
            "sample abscissae must be ascending and inside the interval",
        ));
    }
    let mut stats = Stats::default();
    let mut eval = |t: f64, y: &[f64; N], stats: &mut Stats| -> Result<[f64; N]> {
        stats.evaluations += 1;
        let dy = f(t, y)?;
        if dy.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                zeta: t,
                reason: format!("non-finite derivative {dy:?} at y = {y:?}"),
            });
        }
        Ok(dy)
    };

    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    while next < samples.len() && samples[next] == t0 {
        out.push(y0);
        next += 1;
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = eval(t, &y, &mut stats)?;
    let mut h = initial_step(&mut eval, t, &y, &k1, t_end - t0, tol, &mut stats)?;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= MAX_STEPS {
            return Err(Error::Integration {
                zeta: t,
                reason: "step budget exhausted".into(),
            });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                zeta: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let stage = |coeffs: &[(f64, &[f64; N])]| -> [f64; N] {
            let mut s = y;
            for (c, k) in coeffs {
                for i in 0..N {
                    s[i] += h * c * k[i];
                }
            }
            s
        };
        let k2 = eval(t + C2 * h, &stage(&[(A21, &k1)]), &mut stats)?;
        let k3 = eval(t + C3 * h, &stage(&[(A31, &k1), (A32, &k2)]), &mut stats)?;
        let k4 = eval(
            t + C4 * h,
            &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]),
            &mut stats,
        )?;
        let k5 = eval(
            t + C5 * h,
            &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut stats,
        )?;
        let k6 = eval(
            t + h,
            &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            &mut stats,
        )?;
        let y1 = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = eval(t + h, &y1, &mut stats)?;

        let mut err = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration {
                zeta: t,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            while next < samples.len() && samples[next] <= t_new {
                let theta = ((samples[next] - t) / h).clamp(0.0, 1.0);
                let theta1 = 1.0 - theta;
                let mut ys = [0.0; N];
                for i in 0..N {
                    let r2 = y1[i] - y[i];
                    let r3 = h * k1[i] - r2;
                    let r4 = r2 - h * k7[i] - r3;
                    let r5 = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                    ys[i] = y[i] + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
                }
                out.push(ys);
                next += 1;
            }
            t = t_new;
            y = y1;
            k1 = k7;
            let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            last_rejected = true;
        }
    }
    Ok((out, stats))
}

/// Starting step following Hairer, Norsett & Wanner.
fn initial_step<const N: usize>(
    eval: &mut impl FnMut(f64, &[f64; N], &mut Stats) -> Result<[f64; N]>,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    span: f64,
    tol: Tolerances,
    stats: &mut Stats,
) -> Result<f64> {
    let norm = |v: &[f64; N]| -> f64 {
        let s: f64 = (0..N)
            .map(|i| (v[i] / (tol.abs + tol.rel * y[i].abs())).powi(2))
            .sum();
        (s / N as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let mut y1 = *y;
    for i in 0..N {
        y1[i] += h0 * f0[i];
    }
    let f1 = eval(t + h0, &y1, stats)?;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT: Tolerances = Tolerances {
        rel: 1e-10,
        abs: 1e-12,
    };

    #[test]
    fn harmonic_oscillator_with_dense_output() {
        let samples: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let (ys, stats) = integrate(
            |_, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            20.0,
            &samples,
            TIGHT,
        )
        .unwrap();
        assert_eq!(ys.len(), samples.len());
        for (t, y) in samples.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-8, "t={t}");
        }
        assert!(stats.accepted > 10);
        assert_eq!(
            stats.evaluations,
            1 + 1 + 6 * (stats.accepted + stats.rejected)
        );
    }

    #[test]
    fn exponential_decay() {
        let (ys, _) = integrate(
            |_, y: &[f64; 1]| Ok([-3.0 * y[0]]),
            0.0,
            [2.0],
            1.5,
            &[0.0, 0.7, 1.5],
            TIGHT,
        )
        .unwrap();
        assert_eq!(ys[0], [2.0]);
        assert!((ys[1][0] - 2.0 * (-2.1f64).exp()).abs() < 1e-10);
        assert!((ys[2][0] - 2.0 * (-4.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn fifth_order_convergence_of_endpoint() {
        // error should shrink by about 2^5 when the tolerance allows
        let run = |rel: f64| {
            let (ys, _) = integrate(
                |t, y: &[f64; 1]| Ok([y[0] * t.cos()]),
                0.0,
                [1.0],
                10.0,
                &[10.0],
                Tolerances {
                    rel,
                    abs: rel * 1e-2,
                },
            )
            .unwrap();
            (ys[0][0] - 10f64.sin().exp()).abs()
        };
        assert!(run(1e-6) < 1e-5);
        assert!(run(1e-10) < 1e-9);
    }

    #[test]
    fn nan_aborts_with_position() {
        let err = integrate(
            |t, _y: &[f64; 1]| Ok([if t > 0.5 { f64::NAN } else { 1.0 }]),
            0.0,
            [0.0],
            1.0,
            &[1.0],
            TIGHT,
        )
        .unwrap_err();
        match err {
            Error::Integration { zeta, .. } => assert!(zeta > 0.5 && zeta <= 1.0, "{zeta}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn blow_up_reports_underflow() {
        let err = integrate(
            |_, y: &[f64; 1]| Ok([y[0] * y[0]]),
            0.0,
            [1.0],
            2.0,
            &[2.0],
            TIGHT,
        )
        .unwrap_err();
        match err {
            Error::Integration { zeta, .. } => assert!(zeta < 1.0 && zeta > 0.9, "{zeta}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rejects_bad_samples() {
        let f = |_: f64, y: &[f64; 1]| Ok([y[0]]);
        assert!(integrate(f, 0.0, [1.0], 1.0, &[0.5, 0.2], TIGHT).is_err());
        assert!(integrate(f, 0.0, [1.0], 1.0, &[2.0], TIGHT).is_err());
        assert!(integrate(f, 1.0, [1.0], 1.0, &[1.0], TIGHT).is_err());
    }
}
