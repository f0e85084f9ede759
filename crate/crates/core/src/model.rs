//! Physical parameters and the generators of the atomic dynamics.
//!
//! Two codings of the feedback generator are provided. [`feedback_liouvillian`]
//! spells out every term of the closed-loop master equation, while
//! [`feedback_liouvillian_composed`] derives it from the open-loop generator
//! by composing the feedback kick `e^{𝓜 dW₁}` after the measurement step and
//! keeping Itô terms to first order in `dt`. The two must agree to rounding.
//!
//! The Bloch drift of the feedback generator is exactly `-A`, with `A` the
//! matrix returned by [`a_matrix`] (not its transpose); the test suite pins
//! this relation, but no result-producing code path relies on it.

use std::f64::consts::PI;

use nalgebra::{Complex, Matrix3, Vector3};

use crate::qops::{
    anticommutator_map, commutator_map, dissipator, rmap, sandwich, sigma_phi, BlochVec, Op2,
    State2, Superop, C64,
};
use crate::{Error, Result};

/// Condition number above which a linear solve is reported as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// All physical and control parameters of the model.
///
/// Rates and frequencies share the units of `gamma`. Angles are radians.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysParams {
    /// Natural linewidth γ.
    pub gamma: f64,
    /// Rabi frequency Ω.
    pub omega_rabi: f64,
    /// Detuning Δω = ω₀ − ω.
    pub delta_omega: f64,
    /// Thermal photon number n̄.
    pub n_bar: f64,
    /// Dephasing intensity.
    pub k_d: f64,
    /// |α₁|, amplitude of the feedback (in-loop) channel.
    pub alpha1_abs: f64,
    /// |α₂|, amplitude of the free channel.
    pub alpha2_abs: f64,
    /// ϑ₁ = arg α₁, local-oscillator phase of detector 1.
    pub theta1: f64,
    /// ϑ₂ = arg α₂, local-oscillator phase of detector 2.
    pub theta2: f64,
    /// Feedback gain c.
    pub c: f64,
    /// Feedback phase φ.
    pub phi: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            gamma: 1.0,
            omega_rabi: 0.0,
            delta_omega: 0.0,
            n_bar: 0.0,
            k_d: 0.0,
            alpha1_abs: 0.0,
            alpha2_abs: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            c: 0.0,
            phi: 0.0,
        }
    }
}

impl PhysParams {
    /// Sets the channel amplitudes from their efficiencies |α₁|², |α₂|².
    pub fn with_efficiencies(mut self, alpha1_sq: f64, alpha2_sq: f64) -> Self {
        self.alpha1_abs = alpha1_sq.max(0.0).sqrt();
        self.alpha2_abs = alpha2_sq.max(0.0).sqrt();
        self
    }

    pub fn alpha1(&self) -> C64 {
        C64::from_polar(self.alpha1_abs, self.theta1)
    }

    pub fn alpha2(&self) -> C64 {
        C64::from_polar(self.alpha2_abs, self.theta2)
    }

    /// |α₀|, the amplitude of the undetected forward channel.
    pub fn alpha0_abs(&self) -> f64 {
        (1.0 - self.alpha1_abs.powi(2) - self.alpha2_abs.powi(2))
            .max(0.0)
            .sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("omega_rabi", self.omega_rabi),
            ("delta_omega", self.delta_omega),
            ("n_bar", self.n_bar),
            ("k_d", self.k_d),
            ("alpha1_abs", self.alpha1_abs),
            ("alpha2_abs", self.alpha2_abs),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("c", self.c),
            ("phi", self.phi),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite")));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams("gamma must be positive".into()));
        }
        for (name, v) in [
            ("omega_rabi", self.omega_rabi),
            ("n_bar", self.n_bar),
            ("k_d", self.k_d),
            ("alpha1_abs", self.alpha1_abs),
            ("alpha2_abs", self.alpha2_abs),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be non-negative")));
            }
        }
        let total = self.alpha1_abs.powi(2) + self.alpha2_abs.powi(2);
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "|alpha1|^2 + |alpha2|^2 = {total} exceeds 1"
            )));
        }
        if !(0.0..PI).contains(&self.phi) {
            log::debug!("feedback phase {} outside [0, pi) used as given", self.phi);
        }
        Ok(())
    }
}

/// `M = c√γ σ_φ`, the Hamiltonian added per unit of the in-loop current.
pub fn feedback_op(p: &PhysParams) -> Op2 {
    sigma_phi(p.phi) * (p.c * p.gamma.sqrt())
}

/// Detuning shifted by the feedback, `Δω + cγ|α₁| cos(ϑ₁ − φ)`.
pub fn delta_omega_c(p: &PhysParams) -> f64 {
    p.delta_omega + p.c * p.gamma * p.alpha1_abs * (p.theta1 - p.phi).cos()
}

fn hamiltonian_map(detuning: f64, omega_rabi: f64) -> Superop {
    let h = Op2::sigma_z() * (detuning / 2.0) + Op2::sigma_x() * (omega_rabi / 2.0);
    commutator_map(&h).expect("Hamiltonian is Hermitian")
}

/// `ρ ↦ σz ρ σz − ρ`.
fn dephasing_map() -> Superop {
    sandwich(&Op2::sigma_z()) - Superop::identity()
}

/// The open-loop generator 𝓛.
pub fn liouvillian(p: &PhysParams) -> Result<Superop> {
    p.validate()?;
    let g = p.gamma;
    Ok(hamiltonian_map(p.delta_omega, p.omega_rabi)
        + dephasing_map() * (g * p.k_d)
        + dissipator(&Op2::sigma_plus()) * (g * p.n_bar)
        + dissipator(&Op2::sigma_minus()) * (g * (p.n_bar + 1.0)))
}

/// The closed-loop generator 𝓛_f, written out term by term.
pub fn feedback_liouvillian(p: &PhysParams) -> Result<Superop> {
    p.validate()?;
    let g = p.gamma;
    let a1 = p.alpha1_abs;
    let s_phi = sigma_phi(p.phi);
    let jump = Op2::sigma_minus() * p.alpha1() - s_phi * Complex::new(0.0, p.c);
    let anti = Op2::p_plus() * (a1 * a1 - 2.0 * p.c * a1 * (p.theta1 - p.phi).sin())
        + Op2::identity() * (p.c * p.c);

    Ok(hamiltonian_map(delta_omega_c(p), p.omega_rabi)
        + dephasing_map() * (g * p.k_d)
        + dissipator(&Op2::sigma_plus()) * (g * p.n_bar)
        + dissipator(&Op2::sigma_minus()) * (g * (p.n_bar + 1.0 - a1 * a1))
        + sandwich(&jump) * g
        - anticommutator_map(&anti) * (g / 2.0))
}

/// The closed-loop generator obtained from 𝓛 by the Itô composition
/// `e^{𝓜 dW₁} ∘ 𝓐(t+dt, t)`: `𝓛 + ½𝓜² + √γ 𝓜∘𝓡[α₁σ₋]`.
pub fn feedback_liouvillian_composed(p: &PhysParams) -> Result<Superop> {
    let l = liouvillian(p)?;
    let m = commutator_map(&feedback_op(p))?;
    let r1 = rmap(&(Op2::sigma_minus() * p.alpha1()));
    Ok(l + m.compose(&m) * 0.5 + m.compose(&r1) * p.gamma.sqrt())
}

/// Affine action `d/dt (x, y, z) = B (x, y, z) + k` of a trace-preserving
/// generator on Bloch coordinates.
pub fn bloch_drift(g: &Superop) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    if !g.is_trace_preserving(1e-12) {
        return Err(Error::NotTracePreserving);
    }
    let m = g.matrix();
    let b = m.fixed_view::<3, 3>(1, 1).into_owned();
    let k = m.fixed_view::<3, 1>(1, 0).into_owned();
    Ok((b, k))
}

pub(crate) fn condition_number(m: &Matrix3<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// The stationary state of 𝓛_f, from the affine Bloch system `B x = -k`.
pub fn equilibrium(p: &PhysParams) -> Result<State2> {
    let g = feedback_liouvillian(p)?;
    equilibrium_of(&g)
}

/// Stationary state of an arbitrary trace-preserving generator.
pub fn equilibrium_of(g: &Superop) -> Result<State2> {
    let (b, k) = bloch_drift(g)?;
    let cond = condition_number(&b);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::SingularDynamics {
            what: "equilibrium",
            cond,
        });
    }
    let x = b
        .lu()
        .solve(&(-k))
        .ok_or(Error::SingularDynamics {
            what: "equilibrium",
            cond,
        })?;
    State2::from_bloch(BlochVec::from_vector(&x))
}

/// The 3×3 matrix `A` of the closed-form spectrum, assembled entry by entry.
///
/// Observed relation: the Bloch drift of [`feedback_liouvillian`] is `-A`.
pub fn a_matrix(p: &PhysParams) -> Matrix3<f64> {
    let g = p.gamma;
    let a1 = p.alpha1_abs;
    let c = p.c;
    let (t1, phi) = (p.theta1, p.phi);
    let base = 0.5 + p.n_bar + 2.0 * p.k_d;
    let dwc = delta_omega_c(p);
    let cross = g * (c * a1 * (t1 + phi).cos() + c * c * (2.0 * phi).sin());

    let a11 = g * (base + 2.0 * c * a1 * t1.cos() * phi.sin() + 2.0 * c * c * phi.sin().powi(2));
    let a12 = dwc - cross;
    let a21 = -dwc - cross;
    let a22 = g * (base - 2.0 * c * a1 * t1.sin() * phi.cos() + 2.0 * c * c * phi.cos().powi(2));
    let a33 = g * (1.0 + 2.0 * p.n_bar - 2.0 * c * a1 * (t1 - phi).sin() + 2.0 * c * c);
    let om = p.omega_rabi;

    Matrix3::new(
        a11, a12, 0.0, //
        a21, a22, om, //
        0.0, -om, a33,
    )
}

/// `t⃗ = Tr{X σ⃗}` with
/// `X = e^{iϑ₂}σ₋η + e^{-iϑ₂}ησ₊ − Tr{σ_{ϑ₂}η} η` at equilibrium.
pub fn t_vector(p: &PhysParams) -> Result<Vector3<f64>> {
    let eq = equilibrium(p)?;
    Ok(t_vector_of(p, &eq))
}

pub(crate) fn t_vector_of(p: &PhysParams, eq: &State2) -> Vector3<f64> {
    let eta = *eq.op();
    let e = C64::from_polar(1.0, p.theta2);
    let mean = eq.expect(&sigma_phi(p.theta2));
    let x = Op2::sigma_minus() * eta * e + eta * Op2::sigma_plus() * e.conj() - eta * mean;
    let v = x.pauli_coords();
    debug_assert!(v[1..].iter().all(|z| z.im.abs() < 1e-12));
    Vector3::new(v[1].re, v[2].re, v[3].re)
}

/// Eigenvalues of the Bloch drift of 𝓛_f.
pub fn drift_eigenvalues(p: &PhysParams) -> Result<Vec<C64>> {
    let (b, _) = bloch_drift(&feedback_liouvillian(p)?)?;
    Ok(b.complex_eigenvalues().iter().copied().collect())
}

/// Slowest relaxation rate of 𝓛_f (smallest `-Re λ` over the drift spectrum).
pub fn min_decay_rate(p: &PhysParams) -> Result<f64> {
    Ok(drift_eigenvalues(p)?
        .iter()
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::expm;
    use nalgebra::Vector4;

    fn fig3(c: f64) -> PhysParams {
        PhysParams {
            gamma: 1.0,
            omega_rabi: 2.0,
            phi: PI / 2.0,
            theta1: PI,
            theta2: 0.0,
            c,
            ..Default::default()
        }
        .with_efficiencies(0.45, 0.45)
    }

    #[test]
    fn validation() {
        assert!(PhysParams::default().validate().is_ok());
        let p = PhysParams::default().with_efficiencies(0.8, 0.5);
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let p = PhysParams {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = PhysParams {
            k_d: -0.1,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = PhysParams {
            phi: 4.0,
            ..Default::default()
        };
        assert!(p.validate().is_ok());
        let p = PhysParams::default().with_efficiencies(0.45, 0.45);
        assert!((p.alpha0_abs() - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn feedback_op_examples() {
        let p = PhysParams::default();
        assert!(feedback_op(&p).max_abs_diff(&Op2::zero()) == 0.0);
        let p = PhysParams {
            c: 1.0,
            ..Default::default()
        };
        assert!(feedback_op(&p).max_abs_diff(&Op2::sigma_x()) < 1e-15);
        let p = PhysParams {
            c: 0.5,
            gamma: 4.0,
            phi: PI / 2.0,
            ..Default::default()
        };
        assert!(feedback_op(&p).max_abs_diff(&Op2::sigma_y()) < 1e-15);
    }

    #[test]
    fn delta_omega_c_examples() {
        let p = PhysParams {
            delta_omega: 0.7,
            ..Default::default()
        };
        assert_eq!(delta_omega_c(&p), 0.7);
        let p = PhysParams {
            delta_omega: 0.7,
            c: 0.3,
            theta1: 1.0 + PI / 2.0,
            phi: 1.0,
            ..Default::default()
        }
        .with_efficiencies(0.45, 0.0);
        assert!((delta_omega_c(&p) - 0.7).abs() < 1e-15);
        let p = PhysParams {
            c: 0.1,
            theta1: 0.4,
            phi: 0.4,
            ..Default::default()
        }
        .with_efficiencies(0.45, 0.0);
        assert!((delta_omega_c(&p) - 0.067_082_039_324_993_7).abs() < 1e-12);
    }

    #[test]
    fn liouvillian_pure_decay() {
        let p = PhysParams::default();
        let l = liouvillian(&p).unwrap();
        assert!(l.is_trace_preserving(0.0));
        let eq = equilibrium_of(&l).unwrap();
        assert!(eq.op().max_abs_diff(&Op2::p_minus()) < 1e-15);

        let (b, k) = bloch_drift(&l).unwrap();
        let expect_b = Matrix3::from_diagonal(&Vector3::new(-0.5, -0.5, -1.0));
        assert!((b - expect_b).abs().max() < 1e-15);
        assert!((k - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn transverse_rate_by_finite_difference() {
        // Analytic decay: x(t) = e^{-γt/2} x0, so d/dt x at t=0 is -0.5 for x0 = 1.
        let l = liouvillian(&PhysParams::default()).unwrap();
        let h = 1e-6;
        let x0 = Vector4::new(1.0, 1.0, 0.0, 0.0);
        let fwd = expm(&l, h).apply_coords(&x0);
        let deriv = (fwd[1] - x0[1]) / h;
        assert!((deriv + 0.5).abs() < 1e-5);
    }

    #[test]
    fn longitudinal_relaxation_matches_ode() {
        let l = liouvillian(&PhysParams::default()).unwrap();
        let z0 = 0.6;
        for &t in &[0.1, 1.0, 3.7] {
            let out = expm(&l, t).apply_coords(&Vector4::new(1.0, 0.0, 0.0, z0));
            let expect = (-t).exp() * (z0 + 1.0) - 1.0;
            assert!((out[3] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn feedback_generator_reduces_without_gain() {
        let mut p = fig3(0.0);
        p.delta_omega = 0.3;
        p.n_bar = 0.2;
        p.k_d = 0.1;
        let l = liouvillian(&p).unwrap();
        let lf = feedback_liouvillian(&p).unwrap();
        assert!(l.max_abs_diff(&lf) < 1e-14);
        assert_eq!(feedback_liouvillian_composed(&p).unwrap(), l);
    }

    #[test]
    fn m_squared_fixes_identity() {
        let p = PhysParams {
            c: 0.7,
            phi: 0.3,
            ..Default::default()
        };
        let m = commutator_map(&feedback_op(&p)).unwrap();
        let out = m.compose(&m).apply_state(&State2::maximally_mixed());
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn fig3_feedback_a_entries() {
        let p = fig3(0.45f64.sqrt() / 2.0);
        let a = a_matrix(&p);
        assert!((a[(0, 0)] - 0.275).abs() < 1e-12);
        assert!((a[(1, 1)] - 0.5).abs() < 1e-12);
        assert!((a[(2, 2)] - 0.775).abs() < 1e-12);
        let (b, _) = bloch_drift(&feedback_liouvillian(&p).unwrap()).unwrap();
        assert!((b[(0, 0)] + 0.275).abs() < 1e-12);
    }

    #[test]
    fn a_matrix_without_feedback() {
        let a = a_matrix(&fig3(0.0));
        let expect = Matrix3::new(0.5, 0.0, 0.0, 0.0, 0.5, 2.0, 0.0, -2.0, 1.0);
        assert!((a - expect).abs().max() < 1e-15);

        let p = PhysParams {
            k_d: 0.25,
            n_bar: 0.5,
            ..Default::default()
        };
        let a = a_matrix(&p);
        let expect = Matrix3::from_diagonal(&Vector3::new(1.5, 1.5, 2.0));
        assert!((a - expect).abs().max() < 1e-15);
    }

    #[test]
    fn thermal_equilibrium() {
        for &n in &[0.1, 0.5, 2.0] {
            let p = PhysParams {
                n_bar: n,
                ..Default::default()
            };
            let b = equilibrium(&p).unwrap().to_bloch();
            assert!(b.x.abs() < 1e-15 && b.y.abs() < 1e-15);
            assert!((b.z + 1.0 / (2.0 * n + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrium_matches_long_propagation() {
        let p = fig3(0.0);
        let eq = equilibrium(&p).unwrap();
        let l = liouvillian(&p).unwrap();
        let prop = expm(&l, 40.0);
        for rho0 in [
            State2::ground(),
            State2::excited(),
            State2::from_bloch(BlochVec::new(0.6, -0.3, 0.1)).unwrap(),
        ] {
            let out = prop.apply_state(&rho0);
            assert!(out.max_abs_diff(eq.op()) < 1e-8);
        }
        let res = feedback_liouvillian(&p).unwrap().apply_state(&eq);
        assert!(res.norm() < 1e-12);
    }

    #[test]
    fn singular_equilibrium_reported() {
        // Pure Hamiltonian dynamics has no unique fixed point.
        let g = commutator_map(&Op2::sigma_x()).unwrap();
        assert!(matches!(
            equilibrium_of(&g),
            Err(Error::SingularDynamics { .. })
        ));
    }

    #[test]
    fn t_vector_examples() {
        let p = PhysParams {
            theta2: 0.7,
            ..Default::default()
        }
        .with_efficiencies(0.3, 0.3);
        assert!(t_vector(&p).unwrap().norm() < 1e-15);

        let mut p = fig3(0.2);
        p.theta2 = 0.9;
        let t = t_vector(&p).unwrap();
        p.theta2 += 2.0 * PI;
        assert!((t_vector(&p).unwrap() - t).norm() < 1e-12);
    }

    #[test]
    fn bloch_drift_rejects_non_trace_preserving() {
        let g = rmap(&Op2::sigma_minus());
        assert!(matches!(bloch_drift(&g), Err(Error::NotTracePreserving)));
    }

    #[test]
    fn bloch_drift_of_precession() {
        let w = 1.3;
        let g = commutator_map(&(Op2::sigma_z() * (w / 2.0))).unwrap();
        let (b, k) = bloch_drift(&g).unwrap();
        assert_eq!(k, Vector3::zeros());
        assert!((b + b.transpose()).abs().max() < 1e-15);
        assert!((b[(0, 1)] + w).abs() < 1e-15 && (b[(1, 0)] - w).abs() < 1e-15);
    }
}
