//! Homodyne spectrum of the free channel.
//!
//! The inelastic spectrum is available through two independent routes:
//! [`s_inel`] evaluates the closed form
//! `1 + 2γ|α₂|² s⃗·(A (A² + μ²)⁻¹ t⃗)`, and [`s_inel_via_autocorr`] integrates
//! the stationary autocovariance of the current, built from matrix
//! exponentials of 𝓛_f, against `cos(μτ)`. The elastic line is
//! `S_el(μ) = 2π m² δ(μ)` with `m` the stationary mean current.

mod mc;
mod quad;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::model::{self, condition_number, PhysParams, MAX_CONDITION};
use crate::qops::{expm, rmap, Op2, State2, Superop};
use crate::{Error, Result};

pub use mc::{mc_spectrum, mc_spectrum_with, McSpectrumConfig};

/// Grid values below `1 - SQUEEZING_TOL` count as squeezed.
pub const SQUEEZING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Autocorr,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Autocorr => "autocorr",
            Provenance::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub mu_grid: Vec<f64>,
    pub s_inel: Vec<f64>,
    /// Stationary mean `m` of the free-channel current.
    pub elastic_mean: f64,
    /// Weight `2π m²` of the elastic delta line.
    pub elastic_weight: f64,
    pub stderr: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl SpectrumResult {
    /// CSV with header `mu,s_inel,stderr`; `stderr` is empty when absent.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mu,s_inel,stderr")?;
        for (i, (mu, s)) in self.mu_grid.iter().zip(&self.s_inel).enumerate() {
            match &self.stderr {
                Some(se) => writeln!(w, "{mu},{s},{}", se[i])?,
                None => writeln!(w, "{mu},{s},")?,
            }
        }
        Ok(())
    }

    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, (mu, s)) in self.mu_grid.iter().zip(&self.s_inel).enumerate() {
            let se = self.stderr.as_ref().map(|v| v[i]);
            writeln!(w, "{}", serde_json::json!({"mu": mu, "s_inel": s, "stderr": se}))?;
        }
        Ok(())
    }
}

/// Key-value metadata describing a spectrum export.
pub fn metadata(p: &PhysParams, res: &SpectrumResult) -> Vec<(String, String)> {
    let mut out = vec![
        ("format".to_string(), "fluorospec spectrum".to_string()),
        ("version".to_string(), crate::VERSION.to_string()),
        ("provenance".to_string(), res.provenance.as_str().to_string()),
    ];
    let params = [
        ("gamma", p.gamma),
        ("omega_rabi", p.omega_rabi),
        ("delta_omega", p.delta_omega),
        ("n_bar", p.n_bar),
        ("k_d", p.k_d),
        ("alpha1_sq", p.alpha1_abs * p.alpha1_abs),
        ("alpha2_sq", p.alpha2_abs * p.alpha2_abs),
        ("theta1", p.theta1),
        ("theta2", p.theta2),
        ("c", p.c),
        ("phi", p.phi),
    ];
    for (k, v) in params {
        out.push((k.to_string(), format!("{v:?}")));
    }
    if let (Some(first), Some(last)) = (res.mu_grid.first(), res.mu_grid.last()) {
        out.push(("mu_min".into(), format!("{first:?}")));
        out.push(("mu_max".into(), format!("{last:?}")));
    }
    out.push(("mu_count".into(), res.mu_grid.len().to_string()));
    out.push(("elastic_mean".into(), format!("{:?}", res.elastic_mean)));
    out.push(("elastic_weight".into(), format!("{:?}", res.elastic_weight)));
    out.push(("elastic_convention".into(), "S_el(mu) = 2*pi*m^2*delta(mu)".into()));
    out.push(("shot_noise_level".into(), "1".into()));
    out
}

/// Pieces of the closed form that do not depend on μ.
#[derive(Debug, Clone)]
struct ClosedForm {
    a: Matrix3<f64>,
    a2: Matrix3<f64>,
    t: Vector3<f64>,
    s: Vector3<f64>,
    prefactor: f64,
}

impl ClosedForm {
    fn new(p: &PhysParams) -> Result<Self> {
        Self::with_a(p, model::a_matrix(p))
    }

    fn with_a(p: &PhysParams, a: Matrix3<f64>) -> Result<Self> {
        let t = if p.alpha2_abs == 0.0 {
            Vector3::zeros()
        } else {
            model::t_vector(p)?
        };
        Ok(ClosedForm {
            a,
            a2: a * a,
            t,
            s: Vector3::new(p.theta2.cos(), p.theta2.sin(), 0.0),
            prefactor: 2.0 * p.gamma * p.alpha2_abs.powi(2),
        })
    }

    fn eval(&self, mu: f64) -> Result<f64> {
        if self.prefactor == 0.0 {
            return Ok(1.0);
        }
        let m = self.a2 + Matrix3::identity() * (mu * mu);
        let cond = condition_number(&m);
        if cond.is_nan() || cond > MAX_CONDITION {
            return Err(Error::SingularDynamics {
                what: "A² + μ²",
                cond,
            });
        }
        let x = m.lu().solve(&self.t).ok_or(Error::SingularDynamics {
            what: "A² + μ²",
            cond,
        })?;
        Ok(1.0 + self.prefactor * self.s.dot(&(self.a * x)))
    }
}

/// Inelastic spectrum at frequency `mu` (rotating frame) from the closed form.
pub fn s_inel(p: &PhysParams, mu: f64) -> Result<f64> {
    p.validate()?;
    ClosedForm::new(p)?.eval(mu)
}

/// Closed form with a replaced `A` matrix, for fault injection.
pub(crate) fn s_inel_with_a(p: &PhysParams, mu: f64, a: Matrix3<f64>) -> Result<f64> {
    p.validate()?;
    ClosedForm::with_a(p, a)?.eval(mu)
}

/// [`s_inel`] on a grid, with the elastic line filled in.
pub fn s_inel_grid(p: &PhysParams, mu_grid: &[f64]) -> Result<SpectrumResult> {
    p.validate()?;
    let form = ClosedForm::new(p)?;
    let values = mu_grid
        .iter()
        .map(|&mu| form.eval(mu))
        .collect::<Result<Vec<_>>>()?;
    let (m, weight) = elastic_line(p)?;
    Ok(SpectrumResult {
        mu_grid: mu_grid.to_vec(),
        s_inel: values,
        elastic_mean: m,
        elastic_weight: weight,
        stderr: None,
        provenance: Provenance::Analytic,
    })
}

/// Evenly spaced grid of `count ≥ 2` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "grid needs at least two points");
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// `(m, 2π m²)` with `m = √γ|α₂| Tr{σ_{ϑ₂} η_eq}`.
pub fn elastic_line(p: &PhysParams) -> Result<(f64, f64)> {
    if p.alpha2_abs == 0.0 {
        p.validate()?;
        return Ok((0.0, 0.0));
    }
    let eq = model::equilibrium(p)?;
    let m = p.gamma.sqrt() * p.alpha2_abs * eq.expect(&crate::qops::sigma_phi(p.theta2)).re;
    Ok((m, 2.0 * PI * m * m))
}

/// `𝓡[α₂σ₋]`, without the `√γ`.
fn free_channel_rmap(p: &PhysParams) -> Superop {
    rmap(&(Op2::sigma_minus() * p.alpha2()))
}

/// Second moment of the free current without its delta part:
/// `γ Tr{𝓡[α₂σ₋] e^{|t−s|𝓛_f} 𝓡[α₂σ₋] e^{min(s,t)𝓛_f} ϱ₀}`.
pub fn autocorrelation(p: &PhysParams, rho0: &State2, t: f64, s: f64) -> Result<f64> {
    let g = model::feedback_liouvillian(p)?;
    let r = free_channel_rmap(p);
    let early = expm(&g, t.min(s)).apply_coords(&rho0.coords());
    let later = expm(&g, (t - s).abs()).apply_coords(&r.apply_coords(&early));
    Ok(p.gamma * r.apply_coords(&later)[0])
}

/// Stationary autocovariance of the free current, centered and without the
/// delta part. Evaluated as `γ Tr{𝓡 e^{τ𝓛_f} Y₀}` with the traceless
/// `Y₀ = 𝓡η − Tr{𝓡η}η`, which equals `γ Tr{𝓡 e^{τ𝓛_f} 𝓡 η} − m²`
/// without the cancellation.
#[derive(Debug, Clone)]
pub struct StationaryAutocov {
    generator: Superop,
    r: Superop,
    y0: Vector4<f64>,
    gamma: f64,
    alpha2_abs: f64,
    pub mean: f64,
}

impl StationaryAutocov {
    pub fn new(p: &PhysParams) -> Result<Self> {
        let generator = model::feedback_liouvillian(p)?;
        let eq = model::equilibrium_of(&generator)?;
        let r = free_channel_rmap(p);
        let eta = eq.coords();
        let x = r.apply_coords(&eta);
        let y0 = x - eta * x[0];
        Ok(StationaryAutocov {
            generator,
            r,
            y0,
            gamma: p.gamma,
            alpha2_abs: p.alpha2_abs,
            mean: p.gamma.sqrt() * x[0],
        })
    }

    fn propagated(&self, tau: f64) -> Vector4<f64> {
        expm(&self.generator, tau).apply_coords(&self.y0)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.gamma * self.r.apply_coords(&self.propagated(tau))[0]
    }

    /// Upper bound on `|C(τ)|` from the size of the propagated operator.
    fn envelope(&self, tau: f64) -> f64 {
        let y = self.propagated(tau);
        self.gamma * self.alpha2_abs * (y[1] * y[1] + y[2] * y[2] + y[3] * y[3]).sqrt()
    }
}

pub fn stationary_autocovariance(p: &PhysParams, tau: f64) -> Result<f64> {
    Ok(StationaryAutocov::new(p)?.eval(tau.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrResult {
    pub lag_grid: Vec<f64>,
    /// `C(τ)`, centered, delta part excluded.
    pub values: Vec<f64>,
    pub mean: f64,
}

impl AutocorrResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lag,autocov")?;
        for (l, v) in self.lag_grid.iter().zip(&self.values) {
            writeln!(w, "{l},{v}")?;
        }
        Ok(())
    }
}

pub fn autocovariance_grid(p: &PhysParams, lags: &[f64]) -> Result<AutocorrResult> {
    let c = StationaryAutocov::new(p)?;
    Ok(AutocorrResult {
        lag_grid: lags.to_vec(),
        values: lags.iter().map(|&l| c.eval(l.abs())).collect(),
        mean: c.mean,
    })
}

/// Settings for [`s_inel_via_autocorr`]. Lengths are in units of `1/γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Panel width.
    pub panel: f64,
    /// Absolute tolerance per panel.
    pub panel_tol: f64,
    /// Integration stops once the autocovariance envelope drops below this.
    pub cutoff: f64,
    /// Longest admissible truncation horizon.
    pub max_horizon: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            panel: 1.0,
            panel_tol: 1e-12,
            cutoff: 1e-12,
            max_horizon: 1e4,
        }
    }
}

/// `1 + 2∫₀^∞ cos(μτ) C(τ) dτ` by panel-wise adaptive quadrature.
pub fn s_inel_via_autocorr(p: &PhysParams, mu: f64, quad: &QuadConfig) -> Result<f64> {
    let c = StationaryAutocov::new(p)?;
    if p.alpha2_abs == 0.0 {
        return Ok(1.0);
    }
    let h = quad.panel / p.gamma;
    let horizon = quad.max_horizon / p.gamma;
    let mut integrand = |tau: f64| (mu * tau).cos() * c.eval(tau);
    let mut total = 0.0;
    let mut a = 0.0;
    loop {
        let b = a + h;
        total += quad::integrate(&mut integrand, a, b, quad.panel_tol, 30).0;
        a = b;
        if c.envelope(a) < quad.cutoff {
            break;
        }
        if a >= horizon {
            return Err(Error::QuadratureFailure { horizon });
        }
    }
    Ok(1.0 + 2.0 * total)
}

/// `S(μ; ϑ₂) · S(μ; ϑ₂ + π/2)`.
pub fn heisenberg_product(p: &PhysParams, mu: f64) -> Result<f64> {
    let conj = PhysParams {
        theta2: p.theta2 + PI / 2.0,
        ..*p
    };
    Ok(s_inel(p, mu)? * s_inel(&conj, mu)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingReport {
    pub min_value: f64,
    pub argmin: f64,
    pub squeezed: bool,
}

/// Scans the grid for the lowest spectrum value.
pub fn squeezing_report(p: &PhysParams, mu_grid: &[f64]) -> Result<SqueezingReport> {
    let res = s_inel_grid(p, mu_grid)?;
    let (i, &min_value) = res
        .s_inel
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidConfig("empty grid".into()))?;
    Ok(SqueezingReport {
        min_value,
        argmin: mu_grid[i],
        squeezed: min_value < 1.0 - SQUEEZING_TOL,
    })
}

const FWHM_SCAN_POINTS: usize = 4000;
const FWHM_SCAN_RANGE: f64 = 20.0;

/// Full width at half maximum of `s_inel − 1` around `μ = 0`.
pub fn fwhm(p: &PhysParams) -> Result<f64> {
    p.validate()?;
    let form = ClosedForm::new(p)?;
    let f = |mu: f64| form.eval(mu).map(|v| v - 1.0);
    let peak = f(0.0)?;
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::NotUnimodal(format!(
            "s_inel - 1 = {peak:e} is not positive at mu = 0"
        )));
    }
    let half = 0.5 * peak;
    let reach = FWHM_SCAN_RANGE * p.gamma;
    let step = reach / FWHM_SCAN_POINTS as f64;

    let mut edges = [0.0; 2];
    for (side, dir) in [1.0, -1.0].into_iter().enumerate() {
        let mut prev_mu = 0.0;
        let mut prev = peak;
        let mut crossing = None;
        for k in 1..=FWHM_SCAN_POINTS {
            let mu = dir * step * k as f64;
            let v = f(mu)?;
            if v > prev + 1e-12 * peak {
                return Err(Error::NotUnimodal(format!("s_inel rises again near mu = {mu}")));
            }
            if crossing.is_none() && v <= half {
                crossing = Some((prev_mu, mu));
            }
            prev_mu = mu;
            prev = v;
        }
        let (mut inner, mut outer) = crossing.ok_or_else(|| {
            Error::NotUnimodal("half maximum not reached inside the scan range".into())
        })?;
        for _ in 0..100 {
            let mid = 0.5 * (inner + outer);
            if f(mid)? > half {
                inner = mid;
            } else {
                outer = mid;
            }
            if (outer - inner).abs() < 1e-13 * p.gamma {
                break;
            }
        }
        edges[side] = 0.5 * (inner + outer);
    }
    Ok(edges[0] - edges[1])
}
