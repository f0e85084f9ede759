#![allow(dead_code)]

use std::f64::consts::PI;

use fluorospec::model::PhysParams;
use proptest::prelude::*;

/// Parameter draws over γ ∈ [0.5, 2], Ω ∈ [0, 3], Δω ∈ [−3, 3], n̄ ∈ [0, 1],
/// k_d ∈ [0, 0.5], efficiencies with sum ≤ 1, c ∈ [−1, 1], φ ∈ [0, π),
/// ϑ ∈ [−π, π].
pub fn params() -> impl Strategy<Value = PhysParams> {
    (
        (0.5..=2.0f64, 0.0..=3.0f64, -3.0..=3.0f64, 0.0..=1.0f64, 0.0..=0.5f64),
        (0.0..=1.0f64, 0.0..=1.0f64),
        (-PI..=PI, -PI..=PI, -1.0..=1.0f64, 0.0..PI),
    )
        .prop_map(|((gamma, omega, delta, n_bar, k_d), (e1, e2), (t1, t2, c, phi))| {
            let (e1, e2) = if e1 + e2 > 1.0 { (1.0 - e1, 1.0 - e2) } else { (e1, e2) };
            PhysParams {
                gamma,
                omega_rabi: omega,
                delta_omega: delta,
                n_bar,
                k_d,
                theta1: t1,
                theta2: t2,
                c,
                phi,
                ..Default::default()
            }
            .with_efficiencies(e1, e2)
        })
}

/// The line-narrowing setting: φ = π/2, ϑ₁ = π, ϑ₂ = 0, no detuning, no
/// thermal photons, no dephasing.
pub fn narrowing(gamma: f64, omega: f64, e1: f64, e2: f64, c: f64) -> PhysParams {
    PhysParams {
        gamma,
        omega_rabi: omega,
        phi: PI / 2.0,
        theta1: PI,
        theta2: 0.0,
        c,
        ..Default::default()
    }
    .with_efficiencies(e1, e2)
}

pub fn fig3(c: f64) -> PhysParams {
    narrowing(1.0, 2.0, 0.45, 0.45, c)
}

pub fn lorentzian_plain(p: &PhysParams, mu: f64) -> f64 {
    let (g, o, e2) = (p.gamma, p.omega_rabi, p.alpha2_abs.powi(2));
    1.0 + 2.0 * e2 * o * o / (g * g + 2.0 * o * o) * g * g / (mu * mu + g * g / 4.0)
}

pub fn lorentzian_narrowed(p: &PhysParams, mu: f64) -> f64 {
    let (g, o) = (p.gamma, p.omega_rabi);
    let (e1, e2) = (p.alpha1_abs.powi(2), p.alpha2_abs.powi(2));
    let w = 1.0 - e1;
    1.0 + e2 * (e1 / 2.0 * g * g + 2.0 * o * o) / ((1.0 - e1 / 2.0) * g * g + 2.0 * o * o) * w * g * g
        / (mu * mu + w * w * g * g / 4.0)
}
