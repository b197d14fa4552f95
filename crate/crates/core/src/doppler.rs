//! Thermal averaging over the velocity component along the beams.
//!
//! The 1-D distribution is `w(v) = exp(-v^2/vp^2) / (sqrt(pi) vp)`. The
//! default rule is Gauss-Hermite, whose nodes are matched to exactly this
//! weight; the integrand is analytic in `v`, so the rule converges
//! geometrically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{solve_steady, BlochContext};
use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Execution};
use crate::model::{AtomMedium, DriveFields, SteadyState};

pub const DEFAULT_NODES: usize = 64;

/// Probability density of the velocity component `vz` (s/m).
pub fn velocity_weight(vz: f64, vp: f64) -> Result<f64> {
    if !(vp.is_finite() && vp > 0.0) {
        return Err(Error::domain(format!(
            "most probable speed must be positive for a density, got {vp}; use a single-node quadrature"
        )));
    }
    let u = vz / vp;
    Ok((-u * u).exp() / (std::f64::consts::PI.sqrt() * vp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    GaussHermite,
    /// Equally spaced nodes over `[-4 vp, 4 vp]`, renormalized.
    Trapezoid,
    /// All atoms at rest.
    Delta,
}

/// How to build a quadrature; together with `vp` this fixes the rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub kind: QuadratureKind,
    pub order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            kind: QuadratureKind::GaussHermite,
            order: DEFAULT_NODES,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss_hermite(order: usize) -> Self {
        QuadratureSpec {
            kind: QuadratureKind::GaussHermite,
            order,
        }
    }

    /// Build the rule for a distribution of width `vp`; `vp = 0` always
    /// gives the single-node rule.
    pub fn build(&self, vp: f64) -> Result<VelocityQuadrature> {
        if vp == 0.0 || self.kind == QuadratureKind::Delta {
            return Ok(VelocityQuadrature::delta());
        }
        match self.kind {
            QuadratureKind::GaussHermite => VelocityQuadrature::gauss_hermite(self.order, vp),
            QuadratureKind::Trapezoid => VelocityQuadrature::trapezoid(self.order, vp),
            QuadratureKind::Delta => unreachable!(),
        }
    }
}

/// Nodes (m/s) and normalized weights of a velocity rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityQuadrature {
    kind: QuadratureKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl VelocityQuadrature {
    pub fn delta() -> Self {
        VelocityQuadrature {
            kind: QuadratureKind::Delta,
            nodes: vec![0.0],
            weights: vec![1.0],
        }
    }

    pub fn gauss_hermite(order: usize, vp: f64) -> Result<Self> {
        check_vp(vp)?;
        let (x, w) = hermite_rule(order)?;
        let nodes = x.iter().map(|xi| xi * vp).collect();
        Self::from_parts(QuadratureKind::GaussHermite, nodes, normalize(w))
    }

    pub fn trapezoid(order: usize, vp: f64) -> Result<Self> {
        check_vp(vp)?;
        if order < 2 {
            return Err(Error::domain("trapezoid rule needs at least 2 nodes"));
        }
        let span = 4.0 * vp;
        let h = 2.0 * span / (order - 1) as f64;
        let nodes: Vec<f64> = (0..order).map(|i| -span + h * i as f64).collect();
        let w = nodes
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let end = if i == 0 || i == order - 1 { 0.5 } else { 1.0 };
                end * h * velocity_weight(v, vp).expect("vp checked")
            })
            .collect();
        Self::from_parts(QuadratureKind::Trapezoid, nodes, normalize(w))
    }

    /// Arbitrary rule; weights must be non-negative and sum to one.
    pub fn from_parts(kind: QuadratureKind, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::domain(
                "quadrature needs matching, non-empty node and weight lists",
            ));
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w < 0.0)
        {
            return Err(Error::domain(
                "quadrature weights must be finite and non-negative",
            ));
        }
        let total: CompensatedSum = weights.iter().copied().collect();
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "quadrature weights sum to {}, not 1",
                total.value()
            )));
        }
        Ok(VelocityQuadrature {
            kind,
            nodes,
            weights,
        })
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn check_vp(vp: f64) -> Result<()> {
    if vp.is_finite() && vp > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "most probable speed must be positive, got {vp}"
        )))
    }
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let total = w.iter().copied().collect::<CompensatedSum>().value();
    w.into_iter().map(|x| x / total).collect()
}

/// Gauss-Hermite nodes (ascending) and weights for the weight `exp(-x^2)`,
/// by Newton iteration on the orthonormal Hermite recurrence.
pub fn hermite_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PI_M4: f64 = 0.751_125_544_464_942_5;
    if n == 0 {
        return Err(Error::domain("Gauss-Hermite rule needs at least one node"));
    }
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut roots: Vec<f64> = Vec::with_capacity(n.div_ceil(2));
    for i in 0..n.div_ceil(2) {
        let mut z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => roots[0] - 1.14 * nf.powf(0.426) / roots[0],
            2 => 1.86 * roots[1] - 0.86 * roots[0],
            3 => 1.91 * roots[2] - 0.91 * roots[1],
            _ => 2.0 * roots[i - 1] - roots[i - 2],
        };
        let mut derivative = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PI_M4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            derivative = (2.0 * nf).sqrt() * p2;
            let step = p1 / derivative;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::domain(format!(
                "Gauss-Hermite root {i} of order {n} did not converge"
            )));
        }
        roots.push(z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / (derivative * derivative);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// Velocity-averaged optical coherences and excited population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPolarization {
    pub sigma31: Complex64,
    pub sigma32: Complex64,
    pub rho33: f64,
}

/// Weighted sum of single-class steady states. Classes may be solved
/// concurrently; the reduction always runs in node order.
pub fn averaged_polarization(
    medium: &AtomMedium,
    fields: &DriveFields,
    quad: &VelocityQuadrature,
    exec: Execution,
) -> Result<AveragedPolarization> {
    let states = exec.map(quad.nodes(), |&vz| {
        solve_steady(&BlochContext::new(medium, fields, vz)).map_err(|e| Error::VelocityClass {
            vz,
            source: Box::new(e),
        })
    });
    let mut sums = [CompensatedSum::default(); 5];
    for (state, &w) in states.into_iter().zip(quad.weights()) {
        let s = state?;
        let parts = [
            s.sigma31.re,
            s.sigma31.im,
            s.sigma32.re,
            s.sigma32.im,
            s.rho33,
        ];
        for (acc, p) in sums.iter_mut().zip(parts) {
            acc.add(w * p);
        }
    }
    let [r31, i31, r32, i32, rho33] = sums.map(|s| s.value());
    Ok(AveragedPolarization {
        sigma31: Complex64::new(r31, i31),
        sigma32: Complex64::new(r32, i32),
        rho33,
    })
}

/// Steady state of every velocity class, in node order.
pub fn velocity_resolved(
    medium: &AtomMedium,
    fields: &DriveFields,
    quad: &VelocityQuadrature,
    exec: Execution,
) -> Result<Vec<SteadyState>> {
    exec.map(quad.nodes(), |&vz| {
        solve_steady(&BlochContext::new(medium, fields, vz)).map_err(|e| Error::VelocityClass {
            vz,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect()
}

/// Weighted average of per-class states. `condition` is the worst class.
pub fn average_states(quad: &VelocityQuadrature, states: &[SteadyState]) -> Result<SteadyState> {
    if states.len() != quad.len() {
        return Err(Error::domain(format!(
            "{} states for a {}-node rule",
            states.len(),
            quad.len()
        )));
    }
    let mut sums = [CompensatedSum::default(); 9];
    let mut condition: f64 = 0.0;
    for (s, &w) in states.iter().zip(quad.weights()) {
        let parts = [
            s.rho11,
            s.rho22,
            s.rho33,
            s.sigma21.re,
            s.sigma21.im,
            s.sigma31.re,
            s.sigma31.im,
            s.sigma32.re,
            s.sigma32.im,
        ];
        for (acc, p) in sums.iter_mut().zip(parts) {
            acc.add(w * p);
        }
        condition = condition.max(s.condition);
    }
    let [rho11, rho22, rho33, r21, i21, r31, i31, r32, i32] = sums.map(|s| s.value());
    Ok(SteadyState {
        rho11,
        rho22,
        rho33,
        sigma21: Complex64::new(r21, i21),
        sigma31: Complex64::new(r31, i31),
        sigma32: Complex64::new(r32, i32),
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sodium_d1;
    use nalgebra::{DMatrix, SymmetricEigen};
    use std::f64::consts::PI;

    /// Golub-Welsch: eigen-decomposition of the Jacobi matrix.
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                (
                    eig.eigenvalues[i],
                    PI.sqrt() * eig.eigenvectors[(0, i)].powi(2),
                )
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pairs.into_iter().unzip()
    }

    #[test]
    fn full_average_matches_polarization_average() {
        let medium = sodium_d1();
        let q = VelocityQuadrature::gauss_hermite(16, medium.vp).unwrap();
        let f = DriveFields::resonant(1.2, 0.4, 0.05, 0.3);
        let states = velocity_resolved(&medium, &f, &q, Execution::Parallel).unwrap();
        let avg = average_states(&q, &states).unwrap();
        let pol = averaged_polarization(&medium, &f, &q, Execution::Serial).unwrap();
        assert_eq!(avg.sigma31, pol.sigma31);
        assert_eq!(avg.sigma32, pol.sigma32);
        assert_eq!(avg.rho33, pol.rho33);
        assert!((avg.trace() - 1.0).abs() < 1e-12);
        assert!(average_states(&q, &states[1..]).is_err());
    }

    #[test]
    fn hermite_rule_matches_golub_welsch() {
        for n in [1, 2, 5, 20, 64] {
            let (x, w) = hermite_rule(n).unwrap();
            let (xe, we) = golub_welsch(n);
            for i in 0..n {
                assert!(
                    (x[i] - xe[i]).abs() < 1e-11,
                    "n={n} i={i} {} {}",
                    x[i],
                    xe[i]
                );
                assert!(
                    (w[i] - we[i]).abs() < 1e-12 * we.iter().cloned().fold(0.0, f64::max),
                    "n={n} i={i}"
                );
            }
        }
    }

    #[test]
    fn hermite_rule_integrates_moments() {
        // integral x^{2k} exp(-x^2) = Gamma(k + 1/2)
        let (x, w) = hermite_rule(64).unwrap();
        let mut gamma_half = PI.sqrt();
        for k in 0..20 {
            let m: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(2 * k)).sum();
            assert!((m - gamma_half).abs() < 1e-10 * gamma_half, "k={k}");
            gamma_half *= k as f64 + 0.5;
        }
    }

    #[test]
    fn weight_density() {
        let w0 = velocity_weight(0.0, 564.0).unwrap();
        assert!((w0 - 1.0003e-3).abs() < 1e-3 * 1.0003e-3, "{w0}");
        assert_eq!(
            velocity_weight(123.0, 564.0).unwrap(),
            velocity_weight(-123.0, 564.0).unwrap()
        );
        assert!(velocity_weight(0.0, 0.0).is_err());
    }

    #[test]
    fn weights_are_normalized_and_symmetric() {
        for q in [
            VelocityQuadrature::gauss_hermite(64, 564.0).unwrap(),
            VelocityQuadrature::gauss_hermite(65, 564.0).unwrap(),
            VelocityQuadrature::trapezoid(201, 564.0).unwrap(),
        ] {
            let total: CompensatedSum = q.weights().iter().copied().collect();
            assert!((total.value() - 1.0).abs() < 1e-12);
            let n = q.len();
            for i in 0..n {
                assert!((q.nodes()[i] + q.nodes()[n - 1 - i]).abs() < 1e-9);
                assert!((q.weights()[i] - q.weights()[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_width_builds_single_node() {
        let q = QuadratureSpec::default().build(0.0).unwrap();
        assert_eq!(q.nodes(), &[0.0]);
        assert_eq!(q.kind(), QuadratureKind::Delta);
    }

    #[test]
    fn delta_rule_equals_single_solve() {
        let medium = sodium_d1();
        let f = DriveFields::resonant(2.0, 0.3, 0.02, 1.0);
        let avg =
            averaged_polarization(&medium, &f, &VelocityQuadrature::delta(), Execution::Serial)
                .unwrap();
        let s = solve_steady(&BlochContext::new(&medium, &f, 0.0)).unwrap();
        assert_eq!(avg.sigma31, s.sigma31);
        assert_eq!(avg.sigma32, s.sigma32);
        assert_eq!(avg.rho33, s.rho33);
    }

    #[test]
    fn generation_sign_at_cell_entrance() {
        // Pure pump plus microwave; the emergent loop phase is -pi/2.
        let medium = sodium_d1();
        let f = DriveFields::resonant(2.0, 0.0, 0.02, -std::f64::consts::FRAC_PI_2);
        let q = VelocityQuadrature::gauss_hermite(64, medium.vp).unwrap();
        let avg = averaged_polarization(&medium, &f, &q, Execution::Serial).unwrap();
        assert!(avg.sigma32.im < 0.0, "{:?}", avg.sigma32);
    }

    #[test]
    fn transparent_classes_average_to_zero() {
        let medium = AtomMedium {
            ground_decay_rel: 0.0,
            ..sodium_d1()
        }
        .with_equal_wavevectors();
        let f = DriveFields::resonant(1.5, 1.5, 0.3, 0.0);
        let q = VelocityQuadrature::gauss_hermite(32, medium.vp).unwrap();
        let avg = averaged_polarization(&medium, &f, &q, Execution::Serial).unwrap();
        assert!(avg.rho33.abs() < 1e-12, "{}", avg.rho33);
    }

    #[test]
    fn failures_carry_the_velocity() {
        let medium = sodium_d1();
        let f = DriveFields::resonant(0.0, 0.0, 0.0, 0.0);
        let q = VelocityQuadrature::gauss_hermite(4, medium.vp).unwrap();
        let err = averaged_polarization(&medium, &f, &q, Execution::Serial).unwrap_err();
        match err {
            Error::VelocityClass { vz, .. } => assert_eq!(vz, q.nodes()[0]),
            other => panic!("unexpected {other}"),
        }
    }
}
