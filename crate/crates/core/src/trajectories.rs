//! Stochastic master equations for the monitored atom.
//!
//! Two unravelings of the same measurement are simulated:
//!
//! - **reference measure**: the linear equation, stepped with Euler–Maruyama
//!   in Pauli coordinates `(w, x, y, z)`,
//!   `dσ = 𝓛_f σ dt + 𝓡[m₁]σ dW₁ + 𝓡[m₂]σ dW₂` with `W₁`, `W₂` standard Wiener
//!   processes. The currents are `I_j = dW_j/dt` and `Tr σ_t` is the
//!   likelihood of the record.
//! - **physical measure**: the normalized state
//!   `dρ = 𝓛_f ρ dt + Σ_j (𝓡[m_j]ρ − v_j ρ) dB_j`, with currents
//!   `I_j = v_j + dB_j/dt`. The default [`Scheme::Kraus`] applies
//!   `ρ ↦ MρM† + Σ_k K_k ρ K_k† dt` and renormalizes, with
//!   `M = 1 + (−iH − ½Σ L†L)dt + Σ_j L_j dY_j + ½Σ_{jk} L_j L_k (dY_j dY_k − δ_{jk} dt)`
//!   and `dY_j = v_j dt + dB_j`. It agrees with Euler–Maruyama to first order
//!   and keeps every state positive. [`Scheme::Euler`] is plain
//!   Euler–Maruyama with renormalization.
//!
//! Currents are recorded as block averages `ΔW/Δ` over `record_stride`
//! integration steps (`Δ = record_stride · dt`). Block sums of Wiener
//! increments keep the white-noise level exact.

use std::io::Write;

use nalgebra::{Matrix4, Vector4};

use crate::exec::{try_map_indexed, Execution};
use crate::model::{self, PhysParams};
use crate::qops::{rmap, sigma_phi, BlochVec, Op2, State2, C64};
use crate::rng::NormalStream;
use crate::{Error, Result};

/// Largest tolerated `dt · max|λ(𝓛_f)|` before a [`Warning::StepSize`].
pub const MAX_STEP_RATE: f64 = 0.05;
/// States with an eigenvalue below this abort the run.
pub const POSITIVITY_FLOOR: f64 = -1e-4;

/// Integration scheme for physical-measure runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Kraus,
    Euler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Transient discarded by the spectral estimators.
    pub t_burn: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub record_states: bool,
    /// Integration steps per recorded sample.
    pub record_stride: usize,
    pub initial: State2,
    pub scheme: Scheme,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            t_final: 400.0,
            t_burn: 40.0,
            n_traj: 400,
            seed: 1,
            record_states: false,
            record_stride: 20,
            initial: State2::ground(),
            scheme: Scheme::default(),
            execution: Execution::default(),
        }
    }
}

impl SimConfig {
    /// Defaults with all times expressed in units of `1/γ`.
    pub fn for_gamma(gamma: f64) -> Self {
        let d = SimConfig::default();
        SimConfig {
            dt: d.dt / gamma,
            t_final: d.t_final / gamma,
            t_burn: d.t_burn / gamma,
            ..d
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn n_records(&self) -> usize {
        self.n_steps() / self.record_stride.max(1)
    }

    /// Time between recorded samples.
    pub fn record_interval(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be positive");
        }
        if self.dt > self.t_final {
            return bad("dt exceeds t_final");
        }
        if !(self.t_burn >= 0.0 && self.t_burn < self.t_final) {
            return bad("t_burn must lie in [0, t_final)");
        }
        if self.n_traj == 0 {
            return bad("n_traj must be positive");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive");
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return bad("t_final must be a multiple of dt");
        }
        if !self.n_steps().is_multiple_of(self.record_stride) {
            return bad("number of steps must be a multiple of record_stride");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `dt` is large compared to the fastest rate of the generator.
    StepSize { dt: f64, max_rate: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::StepSize { dt, max_rate } => write!(
                f,
                "step size {dt} is large for max rate {max_rate} (dt*rate = {:.3} > {MAX_STEP_RATE})",
                dt * max_rate
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Reference,
    Physical,
}

/// One sampled path. All vectors are indexed by record, entry `k` covering
/// the block ending at `times[k]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    /// `Tr σ_t` at the end of each block (reference measure only).
    pub weights: Vec<f64>,
    /// Bloch vector at the end of each block, when requested. Under the
    /// reference measure this is the normalized state `σ_t / Tr σ_t`.
    pub states: Vec<BlochVec>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub params: PhysParams,
    pub config: SimConfig,
    pub measure: Measure,
    /// End times of the recorded blocks.
    pub times: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub warnings: Vec<Warning>,
}

impl TrajectoryEnsemble {
    /// Index of the first record whose block starts at or after `t`.
    pub fn first_record_after(&self, t: f64) -> usize {
        let d = self.config.record_interval();
        ((t / d) - 1e-9).ceil().max(0.0) as usize
    }

    /// Writes the ensemble as CSV with header
    /// `time,traj,i1,i2,weight[,x,y,z]`; `weight` is empty for physical runs.
    pub fn write_csv<W: Write>(&self, mut w: W, with_states: bool) -> Result<()> {
        let with_states = with_states && self.config.record_states;
        if with_states {
            writeln!(w, "time,traj,i1,i2,weight,x,y,z")?;
        } else {
            writeln!(w, "time,traj,i1,i2,weight")?;
        }
        for (j, tr) in self.trajectories.iter().enumerate() {
            for (k, t) in self.times.iter().enumerate() {
                let weight = tr.weights.get(k).map(|v| v.to_string()).unwrap_or_default();
                write!(w, "{t},{j},{},{},{weight}", tr.i1[k], tr.i2[k])?;
                if with_states {
                    let b = tr.states[k];
                    write!(w, ",{},{},{}", b.x, b.y, b.z)?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Writes one JSON object per record with the same fields as the CSV.
    pub fn write_json_lines<W: Write>(&self, mut w: W, with_states: bool) -> Result<()> {
        let with_states = with_states && self.config.record_states;
        for (j, tr) in self.trajectories.iter().enumerate() {
            for (k, t) in self.times.iter().enumerate() {
                let mut obj = serde_json::json!({
                    "time": t,
                    "traj": j,
                    "i1": tr.i1[k],
                    "i2": tr.i2[k],
                    "weight": tr.weights.get(k),
                });
                if with_states {
                    let b = tr.states[k];
                    obj["x"] = b.x.into();
                    obj["y"] = b.y.into();
                    obj["z"] = b.z.into();
                }
                writeln!(w, "{obj}")?;
            }
        }
        Ok(())
    }
}

/// Measurement operators `m₁ = √γ(α₁σ₋ − i c σ_φ)` and `m₂ = √γ α₂σ₋`.
pub fn noise_ops(p: &PhysParams) -> (Op2, Op2) {
    let sg = p.gamma.sqrt();
    let m1 = (Op2::sigma_minus() * p.alpha1() - sigma_phi(p.phi) * C64::new(0.0, p.c)) * sg;
    let m2 = Op2::sigma_minus() * (p.alpha2() * sg);
    (m1, m2)
}

/// `(v₁, v₂) = (Tr{𝓡[m₁]ρ}, Tr{𝓡[m₂]ρ})`, the drifts of the currents under
/// the physical measure.
pub fn velocities(rho: &State2, p: &PhysParams) -> (f64, f64) {
    let (m1, m2) = noise_ops(p);
    (
        2.0 * rho.expect(&m1).re,
        2.0 * rho.expect(&m2).re,
    )
}

/// Precomputed matrices for stepping the stochastic master equations.
#[derive(Debug, Clone)]
pub struct SmeStepper {
    generator: Matrix4<f64>,
    r1: Matrix4<f64>,
    r2: Matrix4<f64>,
}

impl SmeStepper {
    pub fn new(p: &PhysParams) -> Result<Self> {
        let (m1, m2) = noise_ops(p);
        Ok(SmeStepper {
            generator: model::feedback_liouvillian(p)?.0,
            r1: rmap(&m1).0,
            r2: rmap(&m2).0,
        })
    }

    /// One Euler–Maruyama step of the linear equation.
    #[inline]
    pub fn step_linear(&self, u: &Vector4<f64>, dw1: f64, dw2: f64, dt: f64) -> Vector4<f64> {
        u + self.generator * u * dt + self.r1 * u * dw1 + self.r2 * u * dw2
    }

    /// One step of the normalized equation. Returns the new coordinates
    /// (with `w = 1`) and the velocities used.
    #[inline]
    pub fn step_physical(&self, u: &Vector4<f64>, db1: f64, db2: f64, dt: f64) -> (Vector4<f64>, f64, f64) {
        let r1u = self.r1 * u;
        let r2u = self.r2 * u;
        let (v1, v2) = self.clamped_velocities(u, &r1u, &r2u);
        let mut next = u
            + self.generator * u * dt
            + (r1u - u * v1) * db1
            + (r2u - u * v2) * db2;
        let w = next[0];
        next /= w;
        (next, v1, v2)
    }

    /// Velocities with the Bloch vector pulled back onto the unit ball.
    #[inline]
    fn clamped_velocities(&self, u: &Vector4<f64>, r1u: &Vector4<f64>, r2u: &Vector4<f64>) -> (f64, f64) {
        let r = (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]).sqrt();
        if r <= u[0] {
            (r1u[0], r2u[0])
        } else {
            let scale = u[0] / r;
            let clamped = Vector4::new(u[0], u[1] * scale, u[2] * scale, u[3] * scale);
            ((self.r1 * clamped)[0], (self.r2 * clamped)[0])
        }
    }
}

/// Kraus-form step for the normalized equation.
#[derive(Debug, Clone)]
pub struct KrausStepper {
    m0: Op2,
    l1: Op2,
    l2: Op2,
    l11: Op2,
    l22: Op2,
    l12: Op2,
    unmonitored: Matrix4<f64>,
}

/// Hamiltonian of 𝓛_f: `Δω_c/2 σ_z + Ω/2 σ_x`.
fn feedback_hamiltonian(p: &PhysParams) -> Op2 {
    Op2::sigma_z() * (0.5 * model::delta_omega_c(p)) + Op2::sigma_x() * (0.5 * p.omega_rabi)
}

/// Jump operators of 𝓛_f that are not monitored.
fn unmonitored_ops(p: &PhysParams) -> [Op2; 3] {
    let g = p.gamma;
    let lost = (p.n_bar + 1.0 - p.alpha1_abs.powi(2) - p.alpha2_abs.powi(2)).max(0.0);
    [
        Op2::sigma_minus() * (g * lost).sqrt(),
        Op2::sigma_plus() * (g * p.n_bar).sqrt(),
        Op2::sigma_z() * (g * p.k_d).sqrt(),
    ]
}

impl KrausStepper {
    pub fn new(p: &PhysParams, dt: f64) -> Self {
        let (l1, l2) = noise_ops(p);
        let ks = unmonitored_ops(p);
        let i = C64::new(0.0, 1.0);
        let mut decay = l1.adjoint() * l1 + l2.adjoint() * l2;
        for k in &ks {
            decay = decay + k.adjoint() * *k;
        }
        let l11 = l1 * l1 * 0.5;
        let l22 = l2 * l2 * 0.5;
        let m0 = Op2::identity() + (feedback_hamiltonian(p) * (-i) - decay * 0.5) * dt - (l11 + l22) * dt;
        let mut unmonitored = Matrix4::zeros();
        for k in &ks {
            unmonitored += crate::qops::sandwich(k).0 * dt;
        }
        KrausStepper {
            m0,
            l1,
            l2,
            l11,
            l22,
            l12: (l1 * l2 + l2 * l1) * 0.5,
            unmonitored,
        }
    }

    /// One step from `rho` (unit trace). Returns the new state and the
    /// velocities used.
    #[inline]
    pub fn step(&self, rho: &Op2, db1: f64, db2: f64, dt: f64) -> (Op2, f64, f64) {
        let v1 = 2.0 * (self.l1 * *rho).trace().re;
        let v2 = 2.0 * (self.l2 * *rho).trace().re;
        let y1 = v1 * dt + db1;
        let y2 = v2 * dt + db2;
        let m = self.m0 + self.l1 * y1 + self.l2 * y2 + self.l11 * (y1 * y1) + self.l22 * (y2 * y2) + self.l12 * (y1 * y2);
        let u = rho.hermitian_coords();
        let mut out = Op2::from_coords(&(self.unmonitored * u)) + m * *rho * m.adjoint();
        out = (out + out.adjoint()) * 0.5;
        let tr = out.trace().re;
        (out * (1.0 / tr), v1, v2)
    }
}

/// Euler–Maruyama step of the linear equation on an operator, followed by
/// projection onto its Hermitian part.
pub fn step_linear(sigma: &Op2, dw1: f64, dw2: f64, p: &PhysParams, dt: f64) -> Result<Op2> {
    let stepper = SmeStepper::new(p)?;
    let u = sigma.hermitian_coords();
    Ok(Op2::from_coords(&stepper.step_linear(&u, dw1, dw2, dt)))
}

fn step_size_warnings(p: &PhysParams, cfg: &SimConfig) -> Result<Vec<Warning>> {
    let max_rate = model::drift_eigenvalues(p)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if cfg.dt * max_rate > MAX_STEP_RATE {
        let w = Warning::StepSize {
            dt: cfg.dt,
            max_rate,
        };
        log::warn!("{w}");
        Ok(vec![w])
    } else {
        Ok(Vec::new())
    }
}

fn bloch_of(u: &Vector4<f64>) -> BlochVec {
    BlochVec::new(u[1] / u[0], u[2] / u[0], u[3] / u[0])
}

fn run_reference(stepper: &SmeStepper, cfg: &SimConfig, index: usize) -> Result<Trajectory> {
    let n_rec = cfg.n_records();
    let stride = cfg.record_stride;
    let dt = cfg.dt;
    let sdt = dt.sqrt();
    let block = cfg.record_interval();
    let mut noise = NormalStream::new(cfg.seed, index as u64);
    let mut u = cfg.initial.coords();
    let mut tr = Trajectory {
        i1: Vec::with_capacity(n_rec),
        i2: Vec::with_capacity(n_rec),
        weights: Vec::with_capacity(n_rec),
        states: Vec::with_capacity(if cfg.record_states { n_rec } else { 0 }),
    };
    for k in 0..n_rec {
        let (mut w1, mut w2) = (0.0, 0.0);
        for _ in 0..stride {
            let dw1 = sdt * noise.standard();
            let dw2 = sdt * noise.standard();
            u = stepper.step_linear(&u, dw1, dw2, dt);
            w1 += dw1;
            w2 += dw2;
        }
        if u[0].is_nan() || u[0] <= 0.0 {
            return Err(Error::PositivityBreach {
                trajectory: index,
                time: (k + 1) as f64 * block,
                eigenvalue: u[0],
            });
        }
        tr.i1.push(w1 / block);
        tr.i2.push(w2 / block);
        tr.weights.push(u[0]);
        if cfg.record_states {
            tr.states.push(bloch_of(&u));
        }
    }
    Ok(tr)
}

enum PhysicalStepper {
    Euler(SmeStepper),
    Kraus(KrausStepper),
}

impl PhysicalStepper {
    #[inline]
    fn step(&self, u: &Vector4<f64>, db1: f64, db2: f64, dt: f64) -> (Vector4<f64>, f64, f64) {
        match self {
            PhysicalStepper::Euler(s) => s.step_physical(u, db1, db2, dt),
            PhysicalStepper::Kraus(s) => {
                let (rho, v1, v2) = s.step(&Op2::from_coords(u), db1, db2, dt);
                (rho.hermitian_coords(), v1, v2)
            }
        }
    }
}

fn run_physical(stepper: &PhysicalStepper, cfg: &SimConfig, index: usize) -> Result<Trajectory> {
    let n_rec = cfg.n_records();
    let stride = cfg.record_stride;
    let dt = cfg.dt;
    let sdt = dt.sqrt();
    let block = cfg.record_interval();
    let mut noise = NormalStream::new(cfg.seed, index as u64);
    let mut u = cfg.initial.coords();
    let mut tr = Trajectory {
        i1: Vec::with_capacity(n_rec),
        i2: Vec::with_capacity(n_rec),
        weights: Vec::new(),
        states: Vec::with_capacity(if cfg.record_states { n_rec } else { 0 }),
    };
    for k in 0..n_rec {
        let (mut q1, mut q2) = (0.0, 0.0);
        for step in 0..stride {
            let db1 = sdt * noise.standard();
            let db2 = sdt * noise.standard();
            let (next, v1, v2) = stepper.step(&u, db1, db2, dt);
            u = next;
            q1 += v1 * dt + db1;
            q2 += v2 * dt + db2;
            let r2 = u[1] * u[1] + u[2] * u[2] + u[3] * u[3];
            if r2 > 1.0 {
                let eig = 0.5 * (1.0 - r2.sqrt());
                if eig < POSITIVITY_FLOOR || !eig.is_finite() {
                    return Err(Error::PositivityBreach {
                        trajectory: index,
                        time: (k * stride + step + 1) as f64 * dt,
                        eigenvalue: eig,
                    });
                }
            }
        }
        tr.i1.push(q1 / block);
        tr.i2.push(q2 / block);
        if cfg.record_states {
            tr.states.push(bloch_of(&u));
        }
    }
    Ok(tr)
}

fn simulate(p: &PhysParams, cfg: &SimConfig, measure: Measure) -> Result<TrajectoryEnsemble> {
    p.validate()?;
    cfg.validate()?;
    let warnings = step_size_warnings(p, cfg)?;
    let trajectories = match measure {
        Measure::Reference => {
            let stepper = SmeStepper::new(p)?;
            try_map_indexed(cfg.n_traj, cfg.execution, |i| run_reference(&stepper, cfg, i))?
        }
        Measure::Physical => {
            let stepper = match cfg.scheme {
                Scheme::Euler => PhysicalStepper::Euler(SmeStepper::new(p)?),
                Scheme::Kraus => PhysicalStepper::Kraus(KrausStepper::new(p, cfg.dt)),
            };
            try_map_indexed(cfg.n_traj, cfg.execution, |i| run_physical(&stepper, cfg, i))?
        }
    };
    let block = cfg.record_interval();
    let times = (1..=cfg.n_records()).map(|k| k as f64 * block).collect();
    Ok(TrajectoryEnsemble {
        params: *p,
        config: cfg.clone(),
        measure,
        times,
        trajectories,
        warnings,
    })
}

/// Samples the linear equation under the reference measure.
pub fn simulate_reference(p: &PhysParams, cfg: &SimConfig) -> Result<TrajectoryEnsemble> {
    simulate(p, cfg, Measure::Reference)
}

/// Samples normalized trajectories and currents under the physical measure.
pub fn simulate_physical(p: &PhysParams, cfg: &SimConfig) -> Result<TrajectoryEnsemble> {
    simulate(p, cfg, Measure::Physical)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Mean and standard error of independent samples.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// `|mean - target| / stderr`.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Empirical second moments of the free-channel current.
#[derive(Debug, Clone)]
pub struct EmpiricalAutocorr {
    /// Lags in time units (multiples of the record interval).
    pub lags: Vec<f64>,
    /// `E[I₂(t) I₂(t+τ)]` at each lag. At lag 0 the discretized delta
    /// `1/Δ` has been subtracted.
    pub estimates: Vec<Estimate>,
}

/// Estimates `E[I₂(t) I₂(t+τ)]` over the post-burn window, averaging over
/// time within each trajectory and then across trajectories.
/// `lags` are counted in record intervals.
pub fn empirical_autocorr(ens: &TrajectoryEnsemble, lags: &[usize]) -> Result<EmpiricalAutocorr> {
    let cfg = &ens.config;
    let block = cfg.record_interval();
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let window = cfg.t_final - cfg.t_burn;
    if window < 10.0 * max_lag as f64 * block {
        return Err(Error::InsufficientWindow {
            have: window,
            need: 10.0 * max_lag as f64 * block,
        });
    }
    let start = ens.first_record_after(cfg.t_burn);
    let n = ens.times.len();
    let estimates = lags
        .iter()
        .map(|&lag| {
            let samples: Vec<f64> = ens
                .trajectories
                .iter()
                .map(|tr| {
                    let count = n - start - lag;
                    let sum: f64 = (start..n - lag).map(|k| tr.i2[k] * tr.i2[k + lag]).sum();
                    let m = sum / count as f64;
                    if lag == 0 {
                        m - 1.0 / block
                    } else {
                        m
                    }
                })
                .collect();
            Estimate::from_samples(&samples)
        })
        .collect();
    Ok(EmpiricalAutocorr {
        lags: lags.iter().map(|&l| l as f64 * block).collect(),
        estimates,
    })
}
