//! Fast self-check of the library invariants on random parameter draws.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::{map_indexed, Execution};
use crate::model::{self, PhysParams};
use crate::spectrum::{self, linear_grid, QuadConfig};

/// Deliberate corruption for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Adds 0.1γ to the first diagonal entry of `A` in the closed form.
    CorruptAMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// Human-readable pass/fail table.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:<6}  detail", "check", "result");
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{:<width$}  {verdict:<6}  {}", c.name, c.detail);
        }
        out
    }
}

/// Parameter draw: γ ∈ [0.5, 2], Ω ∈ [0, 3], Δω ∈ [−3, 3], n̄ ∈ [0, 1],
/// k_d ∈ [0, 0.5], efficiencies uniform on `{|α₁|² + |α₂|² ≤ 1}`,
/// c ∈ [−1, 1], φ ∈ [0, π), ϑ₁, ϑ₂ ∈ [−π, π].
pub fn random_params<R: Rng + ?Sized>(rng: &mut R) -> PhysParams {
    let (mut e1, mut e2): (f64, f64) = (rng.random(), rng.random());
    if e1 + e2 > 1.0 {
        e1 = 1.0 - e1;
        e2 = 1.0 - e2;
    }
    PhysParams {
        gamma: rng.random_range(0.5..=2.0),
        omega_rabi: rng.random_range(0.0..=3.0),
        delta_omega: rng.random_range(-3.0..=3.0),
        n_bar: rng.random_range(0.0..=1.0),
        k_d: rng.random_range(0.0..=0.5),
        alpha1_abs: e1.sqrt(),
        alpha2_abs: e2.sqrt(),
        theta1: rng.random_range(-PI..=PI),
        theta2: rng.random_range(-PI..=PI),
        c: rng.random_range(-1.0..=1.0),
        phi: rng.random_range(0.0..PI),
    }
}

/// `n` independent draws from a generator seeded with `seed`.
pub fn random_draws(seed: u64, n: usize) -> Vec<PhysParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_params(&mut rng)).collect()
}

pub const GENERATOR_DRAWS: usize = 100;
pub const ORACLE_DRAWS: usize = 20;
pub const HEISENBERG_DRAWS: usize = 100;

pub const ORACLE_MUS: [f64; 3] = [0.0, 0.5, 2.0];

fn summarize(name: &'static str, worst: Result<f64, String>, bound: f64, what: &str, le: bool) -> CheckResult {
    match worst {
        Ok(v) => {
            let passed = if le { v <= bound } else { v >= bound };
            let rel = if le { "<=" } else { ">=" };
            CheckResult {
                name,
                passed,
                detail: format!("{what} = {v:.6e} ({rel} {bound:e} required)"),
            }
        }
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e,
        },
    }
}

fn fold_max(results: Vec<crate::Result<f64>>) -> Result<f64, String> {
    results
        .into_iter()
        .try_fold(f64::NEG_INFINITY, |acc, r| r.map(|v| acc.max(v)))
        .map_err(|e| e.to_string())
}

fn fold_min(results: Vec<crate::Result<f64>>) -> Result<f64, String> {
    results
        .into_iter()
        .try_fold(f64::INFINITY, |acc, r| r.map(|v| acc.min(v)))
        .map_err(|e| e.to_string())
}

pub fn check_generator_equivalence(draws: &[PhysParams], mode: Execution) -> CheckResult {
    let diffs = map_indexed(draws.len(), mode, |i| {
        let a = model::feedback_liouvillian(&draws[i])?;
        let b = model::feedback_liouvillian_composed(&draws[i])?;
        Ok(a.max_abs_diff(&b))
    });
    summarize("generator-equivalence", fold_max(diffs), 1e-10, "max |L_f - composed|", true)
}

pub fn check_spectrum_equivalence(draws: &[PhysParams], fault: Option<Fault>, mode: Execution) -> CheckResult {
    let quad = QuadConfig::default();
    let diffs = map_indexed(draws.len(), mode, |i| {
        let p = &draws[i];
        let mut worst: f64 = 0.0;
        for mu in ORACLE_MUS {
            let closed = match fault {
                None => spectrum::s_inel(p, mu)?,
                Some(Fault::CorruptAMatrix) => {
                    let mut a = model::a_matrix(p);
                    a[(0, 0)] += 0.1 * p.gamma;
                    spectrum::s_inel_with_a(p, mu, a)?
                }
            };
            let via = spectrum::s_inel_via_autocorr(p, mu, &quad)?;
            worst = worst.max((closed - via).abs());
        }
        Ok(worst)
    });
    summarize("spectrum-equivalence", fold_max(diffs), 1e-5, "max |closed form - autocorrelation|", true)
}

pub fn check_heisenberg(draws: &[PhysParams], mode: Execution) -> CheckResult {
    let grid = linear_grid(-4.0, 4.0, 41);
    let mins = map_indexed(draws.len(), mode, |i| {
        let mut lo = f64::INFINITY;
        for &mu in &grid {
            lo = lo.min(spectrum::heisenberg_product(&draws[i], mu)?);
        }
        Ok(lo)
    });
    summarize("heisenberg-product", fold_min(mins), 1.0 - 1e-9, "min product", false)
}

pub fn check_white_noise(draws: &[PhysParams], mode: Execution) -> CheckResult {
    let grid = linear_grid(-4.0, 4.0, 41);
    let devs = map_indexed(draws.len(), mode, |i| {
        let p = &draws[i];
        let silent = PhysParams { alpha2_abs: 0.0, ..*p };
        let mut worst: f64 = 0.0;
        for &mu in &grid {
            worst = worst.max((spectrum::s_inel(&silent, mu)? - 1.0).abs());
        }
        // far from resonance the inelastic part is below 1e-4
        let far = (spectrum::s_inel(p, 1e3 * p.gamma)? - 1.0).abs();
        Ok(if far > 1e-4 { far } else { worst })
    });
    summarize("white-noise-floor", fold_max(devs), 1e-12, "max |s_inel - 1|", true)
}

/// Runs all checks on draws derived from `seed`.
pub fn run_suite(seed: u64, fault: Option<Fault>, mode: Execution) -> ValidationReport {
    let draws = random_draws(seed, GENERATOR_DRAWS.max(HEISENBERG_DRAWS));
    let checks = vec![
        check_generator_equivalence(&draws[..GENERATOR_DRAWS], mode),
        check_spectrum_equivalence(&draws[..ORACLE_DRAWS], fault, mode),
        check_heisenberg(&draws[..HEISENBERG_DRAWS], mode),
        check_white_noise(&draws, mode),
    ];
    ValidationReport { seed, checks }
}
