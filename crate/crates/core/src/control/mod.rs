//! Objectives over the control parameters and their optimization.
//!
//! [`optimize`] runs a multistart Nelder–Mead search. Bounded parameters are
//! scaled to `[0, 1]` and projected onto the box; angles are scaled by their
//! bounds but left unconstrained, since every objective is periodic in them.
//! Restart 0 starts from the base point, the others from a Halton sequence
//! shifted by the seed.

pub mod nelder_mead;

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::exec::{map_indexed, try_map_indexed, Execution};
use crate::model::PhysParams;
use crate::rng::splitmix64;
use crate::spectrum::{self, linear_grid};
use crate::{Error, Result};

/// Smallest admissible evaluation budget per restart.
pub const MIN_BUDGET: usize = 50;

/// What to minimize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveSpec {
    /// `s_inel(μ)` at a fixed frequency.
    ValueAtMu(f64),
    /// Minimum of `s_inel` over `count` evenly spaced points of `[lo, hi]`.
    MinOverWindow { lo: f64, hi: f64, count: usize },
    /// Full width at half maximum of the spectral peak.
    Fwhm,
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObjectiveSpec::ValueAtMu(mu) if !mu.is_finite() => {
                Err(Error::InvalidConfig("objective frequency must be finite".into()))
            }
            ObjectiveSpec::MinOverWindow { lo, hi, count } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    Err(Error::InvalidConfig(format!("empty window [{lo}, {hi}]")))
                } else if count < 2 {
                    Err(Error::InvalidConfig("window needs at least two points".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveSpec::ValueAtMu(mu) => write!(f, "value-at-mu:{mu}"),
            ObjectiveSpec::MinOverWindow { lo, hi, count } => write!(f, "min-over-window:{lo}:{hi}:{count}"),
            ObjectiveSpec::Fwhm => write!(f, "fwhm"),
        }
    }
}

impl FromStr for ObjectiveSpec {
    type Err = Error;

    /// Parses `value-at-mu:MU`, `min-over-window:LO:HI:COUNT` or `fwhm`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse objective `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let spec = match parts.as_slice() {
            ["value-at-mu", mu] => ObjectiveSpec::ValueAtMu(num(mu)?),
            ["min-over-window", lo, hi, n] => ObjectiveSpec::MinOverWindow {
                lo: num(lo)?,
                hi: num(hi)?,
                count: n.trim().parse().map_err(|_| bad())?,
            },
            ["fwhm"] => ObjectiveSpec::Fwhm,
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn objective(p: &PhysParams, spec: &ObjectiveSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        ObjectiveSpec::ValueAtMu(mu) => spectrum::s_inel(p, mu),
        ObjectiveSpec::MinOverWindow { lo, hi, count } => {
            Ok(spectrum::squeezing_report(p, &linear_grid(lo, hi, count))?.min_value)
        }
        ObjectiveSpec::Fwhm => spectrum::fwhm(p),
    }
}

/// Tunable entries of [`PhysParams`]. Efficiencies are addressed through
/// their squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamName {
    Gamma,
    OmegaRabi,
    DeltaOmega,
    NBar,
    KD,
    Alpha1Sq,
    Alpha2Sq,
    Theta1,
    Theta2,
    C,
    Phi,
}

impl ParamName {
    pub const ALL: [ParamName; 11] = [
        ParamName::Gamma,
        ParamName::OmegaRabi,
        ParamName::DeltaOmega,
        ParamName::NBar,
        ParamName::KD,
        ParamName::Alpha1Sq,
        ParamName::Alpha2Sq,
        ParamName::Theta1,
        ParamName::Theta2,
        ParamName::C,
        ParamName::Phi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Gamma => "gamma",
            ParamName::OmegaRabi => "omega_rabi",
            ParamName::DeltaOmega => "delta_omega",
            ParamName::NBar => "n_bar",
            ParamName::KD => "k_d",
            ParamName::Alpha1Sq => "alpha1_sq",
            ParamName::Alpha2Sq => "alpha2_sq",
            ParamName::Theta1 => "theta1",
            ParamName::Theta2 => "theta2",
            ParamName::C => "c",
            ParamName::Phi => "phi",
        }
    }

    pub fn is_angle(self) -> bool {
        matches!(self, ParamName::Theta1 | ParamName::Theta2 | ParamName::Phi)
    }

    pub fn get(self, p: &PhysParams) -> f64 {
        match self {
            ParamName::Gamma => p.gamma,
            ParamName::OmegaRabi => p.omega_rabi,
            ParamName::DeltaOmega => p.delta_omega,
            ParamName::NBar => p.n_bar,
            ParamName::KD => p.k_d,
            ParamName::Alpha1Sq => p.alpha1_abs * p.alpha1_abs,
            ParamName::Alpha2Sq => p.alpha2_abs * p.alpha2_abs,
            ParamName::Theta1 => p.theta1,
            ParamName::Theta2 => p.theta2,
            ParamName::C => p.c,
            ParamName::Phi => p.phi,
        }
    }

    pub fn set(self, p: &mut PhysParams, v: f64) {
        match self {
            ParamName::Gamma => p.gamma = v,
            ParamName::OmegaRabi => p.omega_rabi = v,
            ParamName::DeltaOmega => p.delta_omega = v,
            ParamName::NBar => p.n_bar = v,
            ParamName::KD => p.k_d = v,
            ParamName::Alpha1Sq => p.alpha1_abs = v.max(0.0).sqrt(),
            ParamName::Alpha2Sq => p.alpha2_abs = v.max(0.0).sqrt(),
            ParamName::Theta1 => p.theta1 = v,
            ParamName::Theta2 => p.theta2 = v,
            ParamName::C => p.c = v,
            ParamName::Phi => p.phi = v,
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown parameter `{s}`")))
    }
}

/// A free parameter and its search box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParam {
    pub name: ParamName,
    pub lo: f64,
    pub hi: f64,
}

impl FreeParam {
    pub fn new(name: ParamName, lo: f64, hi: f64) -> Self {
        FreeParam { name, lo, hi }
    }

    fn to_value(self, s: f64) -> f64 {
        let v = self.lo + s * (self.hi - self.lo);
        if self.name.is_angle() {
            wrap_angle(v)
        } else {
            v
        }
    }

    fn to_scaled(self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

impl FromStr for FreeParam {
    type Err = Error;

    /// Parses `name:lo:hi`; `pi` literals are accepted in the bounds.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse free parameter `{s}` (expected name:lo:hi)"));
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi] = parts.as_slice() else {
            return Err(bad());
        };
        let num = |t: &str| crate::config::parse_real(t).ok_or_else(bad);
        Ok(FreeParam::new(name.trim().parse()?, num(lo)?, num(hi)?))
    }
}

/// Maps an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        x
    } else {
        (x + PI).rem_euclid(2.0 * PI) - PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub budget: usize,
    /// Simplex diameter at which a restart counts as converged.
    pub tol: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            restarts: 8,
            budget: 400,
            tol: 1e-6,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

/// One objective evaluation; `values` follow the order of the free set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub restart: usize,
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub best_params: PhysParams,
    pub best_value: f64,
    pub free: Vec<FreeParam>,
    pub spec: ObjectiveSpec,
    pub trace: Vec<Evaluation>,
    /// Whether the restart that produced the best value converged.
    pub converged: bool,
    pub restarts_used: usize,
}

impl OptimResult {
    /// Key-value report.
    pub fn report(&self) -> String {
        let mut pairs: Vec<(String, String)> = vec![
            ("objective".into(), self.spec.to_string()),
            ("best_value".into(), format!("{:?}", self.best_value)),
            ("converged".into(), self.converged.to_string()),
            ("restarts_used".into(), self.restarts_used.to_string()),
            ("evaluations".into(), self.trace.len().to_string()),
        ];
        for fp in &self.free {
            pairs.push((format!("free.{}", fp.name), format!("[{:?}, {:?}]", fp.lo, fp.hi)));
        }
        for name in ParamName::ALL {
            pairs.push((format!("best.{name}"), format!("{:?}", name.get(&self.best_params))));
        }
        crate::io::render_key_values(&pairs)
    }

    /// CSV with header `eval_index,<free names>,value`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names: Vec<&str> = self.free.iter().map(|f| f.name.as_str()).collect();
        writeln!(w, "eval_index,{},value", names.join(","))?;
        for (i, e) in self.trace.iter().enumerate() {
            let vals: Vec<String> = e.values.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{i},{},{}", vals.join(","), e.objective)?;
        }
        Ok(())
    }
}

fn apply(base: &PhysParams, free: &[FreeParam], values: &[f64]) -> PhysParams {
    let mut p = *base;
    for (fp, &v) in free.iter().zip(values) {
        fp.name.set(&mut p, v);
    }
    p
}

/// Objective value, or `+∞` where the point is infeasible or the objective
/// is undefined.
fn penalized(p: &PhysParams, spec: &ObjectiveSpec) -> f64 {
    if p.validate().is_err() {
        return f64::INFINITY;
    }
    match objective(p, spec) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

fn check_free(free: &[FreeParam]) -> Result<()> {
    if free.is_empty() {
        return Err(Error::InvalidConfig("no free parameters".into()));
    }
    for (i, fp) in free.iter().enumerate() {
        if !(fp.lo.is_finite() && fp.hi.is_finite() && fp.lo < fp.hi) {
            return Err(Error::InvalidConfig(format!(
                "bounds of {} must be finite with lo < hi",
                fp.name
            )));
        }
        if free[..i].iter().any(|o| o.name == fp.name) {
            return Err(Error::InvalidConfig(format!("{} listed twice", fp.name)));
        }
    }
    Ok(())
}

/// Multistart Nelder–Mead over the free parameters. A restart that runs out
/// of budget leaves `converged = false` if it holds the best value.
pub fn optimize(
    base: &PhysParams,
    free: &[FreeParam],
    spec: &ObjectiveSpec,
    cfg: &OptimConfig,
) -> Result<OptimResult> {
    base.validate()?;
    spec.validate()?;
    check_free(free)?;
    if cfg.budget < MIN_BUDGET {
        return Err(Error::InvalidConfig(format!(
            "budget {} is below the minimum of {MIN_BUDGET} evaluations per restart",
            cfg.budget
        )));
    }
    let restarts = cfg.restarts.max(1);
    let settings = nelder_mead::Settings {
        clamp: free.iter().map(|f| !f.name.is_angle()).collect(),
        initial_step: 0.1,
        tol: cfg.tol,
        max_evals: cfg.budget,
    };
    let shift = splitmix64(cfg.seed) % 4096;

    let runs = map_indexed(restarts, cfg.execution, |r| {
        let start: Vec<f64> = if r == 0 {
            free.iter().map(|f| f.to_scaled(f.name.get(base))).collect()
        } else {
            nelder_mead::halton(shift + r as u64, free.len())
        };
        let mut trace = Vec::new();
        let outcome = nelder_mead::minimize(
            |x| {
                let values: Vec<f64> = free.iter().zip(x).map(|(f, &s)| f.to_value(s)).collect();
                let v = penalized(&apply(base, free, &values), spec);
                trace.push(Evaluation {
                    restart: r,
                    values,
                    objective: v,
                });
                v
            },
            &start,
            &settings,
        );
        (outcome, trace)
    });

    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.value.total_cmp(&b.1 .0.value))
        .expect("at least one restart");
    let best = &runs[best_idx].0;
    if !best.value.is_finite() {
        return Err(Error::InvalidConfig(
            "objective is undefined everywhere the search went".into(),
        ));
    }
    let values: Vec<f64> = free.iter().zip(&best.best).map(|(f, &s)| f.to_value(s)).collect();
    let best_params = apply(base, free, &values);
    let converged = best.converged;
    if !converged {
        log::warn!("optimizer budget exhausted before convergence");
    }
    Ok(OptimResult {
        best_params,
        best_value: best.value,
        free: free.to_vec(),
        spec: *spec,
        trace: runs.into_iter().flat_map(|(_, t)| t).collect(),
        converged,
        restarts_used: restarts,
    })
}

/// Maximum number of points in a scan.
pub const MAX_SCAN_POINTS: usize = 1_000_000;

/// Exhaustive objective table over one or two parameter grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub axes: Vec<(ParamName, Vec<f64>)>,
    /// Parameter values of each row, in row-major order over the axes.
    pub points: Vec<Vec<f64>>,
    /// `None` where the objective is undefined (for example a width of a
    /// spectrum without a single peak) or the point is invalid.
    pub values: Vec<Option<f64>>,
}

impl ScanTable {
    /// Row with the lowest defined value.
    pub fn argmin(&self) -> Option<(&[f64], f64)> {
        self.points
            .iter()
            .zip(&self.values)
            .filter_map(|(pt, v)| v.map(|v| (pt.as_slice(), v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names: Vec<&str> = self.axes.iter().map(|a| a.0.as_str()).collect();
        writeln!(w, "{},value", names.join(","))?;
        for (pt, v) in self.points.iter().zip(&self.values) {
            let vals: Vec<String> = pt.iter().map(|x| x.to_string()).collect();
            match v {
                Some(v) => writeln!(w, "{},{v}", vals.join(","))?,
                None => writeln!(w, "{},", vals.join(","))?,
            }
        }
        Ok(())
    }
}

pub fn grid_scan(
    base: &PhysParams,
    axes: &[(ParamName, Vec<f64>)],
    spec: &ObjectiveSpec,
    mode: Execution,
) -> Result<ScanTable> {
    spec.validate()?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidConfig("scan over one or two parameters".into()));
    }
    if axes.iter().any(|a| a.1.is_empty()) {
        return Err(Error::InvalidConfig("empty scan axis".into()));
    }
    let total: usize = axes.iter().map(|a| a.1.len()).product();
    if total > MAX_SCAN_POINTS {
        return Err(Error::InvalidConfig(format!("{total} scan points exceed {MAX_SCAN_POINTS}")));
    }
    let inner = if axes.len() == 2 { axes[1].1.len() } else { 1 };
    let points: Vec<Vec<f64>> = (0..total)
        .map(|k| {
            let mut pt = vec![axes[0].1[k / inner]];
            if axes.len() == 2 {
                pt.push(axes[1].1[k % inner]);
            }
            pt
        })
        .collect();
    let values = try_map_indexed(total, mode, |k| -> Result<Option<f64>> {
        let mut p = *base;
        for (axis, &v) in axes.iter().zip(&points[k]) {
            axis.0.set(&mut p, v);
        }
        if p.validate().is_err() {
            return Ok(None);
        }
        Ok(objective(&p, spec).ok())
    })?;
    Ok(ScanTable {
        axes: axes.to_vec(),
        points,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1() -> PhysParams {
        PhysParams {
            omega_rabi: 0.2976,
            theta2: -PI / 2.0,
            ..Default::default()
        }
        .with_efficiencies(0.45, 0.45)
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("value-at-mu:0".parse::<ObjectiveSpec>().unwrap(), ObjectiveSpec::ValueAtMu(0.0));
        assert_eq!(
            "min-over-window:-4:4:801".parse::<ObjectiveSpec>().unwrap(),
            ObjectiveSpec::MinOverWindow {
                lo: -4.0,
                hi: 4.0,
                count: 801
            }
        );
        assert_eq!("fwhm".parse::<ObjectiveSpec>().unwrap(), ObjectiveSpec::Fwhm);
        assert!("min-over-window:1:1:10".parse::<ObjectiveSpec>().is_err());
        assert!("min-over-window:0:1:1".parse::<ObjectiveSpec>().is_err());
        assert!("peak".parse::<ObjectiveSpec>().is_err());
        let spec = ObjectiveSpec::MinOverWindow {
            lo: -1.5,
            hi: 2.0,
            count: 11,
        };
        assert_eq!(spec.to_string().parse::<ObjectiveSpec>().unwrap(), spec);
    }

    #[test]
    fn free_param_parsing() {
        let f: FreeParam = "omega_rabi:0.01:3".parse().unwrap();
        assert_eq!(f, FreeParam::new(ParamName::OmegaRabi, 0.01, 3.0));
        let f: FreeParam = "theta2:-pi:pi".parse().unwrap();
        assert_eq!((f.lo, f.hi), (-PI, PI));
        assert!("omega:0:1".parse::<FreeParam>().is_err());
        assert!("c:0".parse::<FreeParam>().is_err());
    }

    #[test]
    fn param_accessors_round_trip() {
        let mut p = set1();
        for (i, name) in ParamName::ALL.into_iter().enumerate() {
            let v = 0.1 + 0.01 * i as f64;
            name.set(&mut p, v);
            assert!((name.get(&p) - v).abs() < 1e-15, "{name}");
            assert_eq!(name.as_str().parse::<ParamName>().unwrap(), name);
        }
    }

    #[test]
    fn objective_examples() {
        let dark = PhysParams::default().with_efficiencies(0.5, 0.0);
        for spec in [
            ObjectiveSpec::ValueAtMu(0.4),
            ObjectiveSpec::MinOverWindow {
                lo: -4.0,
                hi: 4.0,
                count: 9,
            },
        ] {
            assert_eq!(objective(&dark, &spec).unwrap(), 1.0);
        }
        assert!(objective(&set1(), &ObjectiveSpec::ValueAtMu(0.0)).unwrap() < 1.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.3), 0.3);
        assert!((wrap_angle(-PI) + PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_requests() {
        let spec = ObjectiveSpec::ValueAtMu(0.0);
        let cfg = OptimConfig::default();
        assert!(optimize(&set1(), &[], &spec, &cfg).is_err());
        let f = [FreeParam::new(ParamName::OmegaRabi, 1.0, 1.0)];
        assert!(optimize(&set1(), &f, &spec, &cfg).is_err());
        let f = [FreeParam::new(ParamName::OmegaRabi, 0.0, 1.0)];
        let small = OptimConfig { budget: 10, ..cfg };
        assert!(optimize(&set1(), &f, &spec, &small).is_err());
        let twice = [f[0], f[0]];
        assert!(optimize(&set1(), &twice, &spec, &cfg).is_err());
    }

    #[test]
    fn optimum_matches_best_trace_entry() {
        let f = [FreeParam::new(ParamName::OmegaRabi, 0.01, 3.0)];
        let spec = ObjectiveSpec::ValueAtMu(0.0);
        let res = optimize(&set1(), &f, &spec, &OptimConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.restarts_used, 8);
        let again = objective(&res.best_params, &spec).unwrap();
        assert!((again - res.best_value).abs() <= 1e-12);
        let trace_min = res.trace.iter().map(|e| e.objective).fold(f64::INFINITY, f64::min);
        assert_eq!(trace_min, res.best_value);
    }

    #[test]
    fn scan_layout() {
        let axes = vec![
            (ParamName::OmegaRabi, vec![0.2, 0.3]),
            (ParamName::C, vec![0.0, 0.1, 0.2]),
        ];
        let table = grid_scan(&set1(), &axes, &ObjectiveSpec::ValueAtMu(0.0), Execution::Sequential).unwrap();
        assert_eq!(table.points.len(), 6);
        assert_eq!(table.points[1], vec![0.2, 0.1]);
        assert_eq!(table.points[3], vec![0.3, 0.0]);
        let one = grid_scan(
            &set1(),
            &[(ParamName::OmegaRabi, vec![0.5])],
            &ObjectiveSpec::ValueAtMu(0.0),
            Execution::Sequential,
        )
        .unwrap();
        let mut p = set1();
        p.omega_rabi = 0.5;
        assert_eq!(one.values, vec![Some(objective(&p, &ObjectiveSpec::ValueAtMu(0.0)).unwrap())]);
        let invalid = grid_scan(
            &set1(),
            &[(ParamName::Alpha1Sq, vec![0.6, 0.7])],
            &ObjectiveSpec::ValueAtMu(0.0),
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(invalid.values, vec![None, None]);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("omega_rabi,c,value\n"));
    }
}
