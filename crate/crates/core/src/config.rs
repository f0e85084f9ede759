//! Run configuration: a `key = value` text format and named presets.
//!
//! One assignment per line; `#` starts a comment. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `preset` | start from a named preset | none |
//! | `gamma` | natural linewidth γ | 1 |
//! | `omega_rabi`, `delta_omega` | Rabi frequency, detuning | 0 |
//! | `n_bar`, `k_d` | thermal photons, dephasing | 0 |
//! | `alpha1_sq`, `alpha2_sq` | channel efficiencies | 0 |
//! | `theta1`, `theta2`, `phi` | phases (radians) | 0 |
//! | `c` | feedback gain | 0 |
//! | `dt`, `t_final`, `t_burn` | integration grid | `1e-3/γ`, `400/γ`, `40/γ` |
//! | `n_traj`, `seed` | ensemble size, seed | 400, 1 |
//! | `record_stride` | steps per recorded current sample | 20 |
//! | `scheme` | `kraus` or `euler` | `kraus` |
//! | `mu_min`, `mu_max`, `mu_count` | frequency grid | −4, 4, 801 |
//!
//! Real values accept `pi` literals such as `pi`, `-pi/2` or `3*pi/4`.
//! A `preset` line is applied before every other key regardless of position.

use std::f64::consts::PI;
use std::path::PathBuf;

use crate::io::Format;
use crate::model::PhysParams;
use crate::qops::State2;
use crate::spectrum::linear_grid;
use crate::trajectories::{Scheme, SimConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            min: -4.0,
            max: 4.0,
            count: 801,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        linear_grid(self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysParams,
    pub sim: SimConfig,
    pub grid: GridSpec,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub preset: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: PhysParams::default(),
            sim: SimConfig::default(),
            grid: GridSpec::default(),
            output: None,
            format: Format::Csv,
            preset: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.sim.validate()?;
        if self.grid.count < 2 {
            return Err(Error::InvalidConfig("mu_count must be at least 2".into()));
        }
        if !(self.grid.min.is_finite() && self.grid.max.is_finite() && self.grid.min < self.grid.max) {
            return Err(Error::InvalidConfig("mu_min must be below mu_max".into()));
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 11] = [
    "fig1_case1",
    "fig1_case2",
    "fig1_case3",
    "fig1_case4",
    "fig2_case1",
    "fig2_case2",
    "fig2_case3",
    "fig2_case4",
    "fig3_nofeedback",
    "fig3_feedback",
    "dark",
];

fn fig1(case: usize) -> PhysParams {
    let base = PhysParams::default().with_efficiencies(0.45, 0.45);
    match case {
        1 => PhysParams {
            omega_rabi: 0.2976,
            theta2: -PI / 2.0,
            ..base
        },
        2 => PhysParams {
            delta_omega: 1.8195,
            omega_rabi: 1.7988,
            theta2: -0.1438,
            ..base
        },
        3 => PhysParams {
            c: 0.0896,
            omega_rabi: 0.2698,
            theta1: PI / 2.0,
            theta2: -PI / 2.0,
            phi: 0.0,
            ..base
        },
        _ => PhysParams {
            delta_omega: 1.6920,
            c: 0.1326,
            omega_rabi: 1.9276,
            theta1: 2.8168,
            theta2: -0.0851,
            phi: 1.2460,
            ..base
        },
    }
}

fn fig3(feedback: bool) -> PhysParams {
    PhysParams {
        omega_rabi: 2.0,
        phi: PI / 2.0,
        theta1: PI,
        theta2: 0.0,
        c: if feedback { 0.45f64.sqrt() / 2.0 } else { 0.0 },
        ..PhysParams::default().with_efficiencies(0.45, 0.45)
    }
}

/// Physical parameters of a named preset.
pub fn preset_params(name: &str) -> Result<PhysParams> {
    let p = match name {
        "fig1_case1" => fig1(1),
        "fig1_case2" => fig1(2),
        "fig1_case3" => fig1(3),
        "fig1_case4" => fig1(4),
        "fig2_case1" | "fig2_case2" | "fig2_case3" | "fig2_case4" => {
            let case = name.as_bytes()[name.len() - 1] - b'0';
            let p = fig1(case as usize);
            PhysParams {
                theta2: p.theta2 + PI / 2.0,
                ..p
            }
        }
        "fig3_nofeedback" => fig3(false),
        "fig3_feedback" => fig3(true),
        "dark" => PhysParams::default().with_efficiencies(0.45, 0.45),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(p)
}

/// Full configuration of a named preset, with default simulation settings.
pub fn preset(name: &str) -> Result<RunConfig> {
    let params = preset_params(name)?;
    Ok(RunConfig {
        sim: SimConfig::for_gamma(params.gamma),
        params,
        preset: Some(name.to_string()),
        ..Default::default()
    })
}

/// Parses a real number, accepting `[-][k*]pi[/n]` forms.
pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1.0, r.trim()),
        None => (1.0, t),
    };
    let (num, den) = match rest.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (rest, 1.0),
    };
    let factor = match num.split_once('*') {
        Some((k, p)) if p.trim() == "pi" => k.trim().parse::<f64>().ok()?,
        None if num == "pi" => 1.0,
        _ => return None,
    };
    Some(sign * factor * PI / den)
}

#[derive(Default)]
struct SimOverrides {
    dt: Option<f64>,
    t_final: Option<f64>,
    t_burn: Option<f64>,
}

/// Parses the key-value format into a validated [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None)
}

/// Like [`parse_config`], starting from `base_preset` when the text has no
/// `preset` line of its own.
pub fn parse_config_with(text: &str, base_preset: Option<&str>) -> Result<RunConfig> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut preset_name: Option<(usize, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if value.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("missing value for `{key}`"),
            });
        }
        if entries.iter().any(|e| e.1 == key) || (key == "preset" && preset_name.is_some()) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
        if key == "preset" {
            preset_name = Some((line_no, value));
        } else {
            entries.push((line_no, key, value));
        }
    }

    if let Some(name) = base_preset {
        if let Some((line, _)) = &preset_name {
            return Err(Error::Parse {
                line: *line,
                msg: "preset given both in the file and on the command line".into(),
            });
        }
        preset_name = Some((0, name.to_string()));
    }
    let mut cfg = match &preset_name {
        Some((line, name)) => preset(name).map_err(|e| Error::Parse {
            line: *line,
            msg: e.to_string(),
        })?,
        None => RunConfig::default(),
    };
    let mut sim = SimOverrides::default();

    for (line, key, value) in &entries {
        let line = *line;
        let real = || {
            parse_real(value).ok_or_else(|| Error::Parse {
                line,
                msg: format!("`{key}`: cannot parse `{value}` as a number"),
            })
        };
        let count = || {
            value.parse::<u64>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{key}`: expected a non-negative integer, found `{value}`"),
            })
        };
        let sq_root = |v: f64| {
            if v < 0.0 {
                Err(Error::InvalidParams(format!("{key} must be non-negative")))
            } else {
                Ok(v.sqrt())
            }
        };
        let p = &mut cfg.params;
        match key.as_str() {
            "gamma" => p.gamma = real()?,
            "omega_rabi" => p.omega_rabi = real()?,
            "delta_omega" => p.delta_omega = real()?,
            "n_bar" => p.n_bar = real()?,
            "k_d" => p.k_d = real()?,
            "alpha1_sq" => p.alpha1_abs = sq_root(real()?)?,
            "alpha2_sq" => p.alpha2_abs = sq_root(real()?)?,
            "theta1" => p.theta1 = real()?,
            "theta2" => p.theta2 = real()?,
            "c" => p.c = real()?,
            "phi" => p.phi = real()?,
            "dt" => sim.dt = Some(real()?),
            "t_final" => sim.t_final = Some(real()?),
            "t_burn" => sim.t_burn = Some(real()?),
            "n_traj" => cfg.sim.n_traj = count()? as usize,
            "seed" => cfg.sim.seed = count()?,
            "record_stride" => cfg.sim.record_stride = count()? as usize,
            "scheme" => {
                cfg.sim.scheme = match value.as_str() {
                    "kraus" => Scheme::Kraus,
                    "euler" => Scheme::Euler,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("`scheme`: expected kraus or euler, found `{value}`"),
                        })
                    }
                }
            }
            "mu_min" => cfg.grid.min = real()?,
            "mu_max" => cfg.grid.max = real()?,
            "mu_count" => cfg.grid.count = count()? as usize,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
    }

    let scaled = SimConfig::for_gamma(cfg.params.gamma);
    if preset_name.is_none() || entries.iter().any(|e| e.1 == "gamma") {
        cfg.sim.dt = scaled.dt;
        cfg.sim.t_final = scaled.t_final;
        cfg.sim.t_burn = scaled.t_burn;
    }
    cfg.sim.dt = sim.dt.unwrap_or(cfg.sim.dt);
    cfg.sim.t_final = sim.t_final.unwrap_or(cfg.sim.t_final);
    cfg.sim.t_burn = sim.t_burn.unwrap_or(cfg.sim.t_burn);
    cfg.sim.initial = State2::ground();
    cfg.validate()?;
    Ok(cfg)
}

/// Renders a configuration so that [`parse_config`] reproduces it.
pub fn render(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let s = &cfg.sim;
    let mut out = String::new();
    if let Some(name) = &cfg.preset {
        out.push_str(&format!("preset = {name}\n"));
    }
    let reals = [
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
        ("dt", s.dt),
        ("t_final", s.t_final),
        ("t_burn", s.t_burn),
    ];
    for (k, v) in reals {
        out.push_str(&format!("{k} = {v:?}\n"));
    }
    out.push_str(&format!("n_traj = {}\n", s.n_traj));
    out.push_str(&format!("seed = {}\n", s.seed));
    out.push_str(&format!("record_stride = {}\n", s.record_stride));
    let scheme = match s.scheme {
        Scheme::Kraus => "kraus",
        Scheme::Euler => "euler",
    };
    out.push_str(&format!("scheme = {scheme}\n"));
    out.push_str(&format!("mu_min = {:?}\n", cfg.grid.min));
    out.push_str(&format!("mu_max = {:?}\n", cfg.grid.max));
    out.push_str(&format!("mu_count = {}\n", cfg.grid.count));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let cfg = parse_config("gamma = 1\nomega_rabi = 2\nalpha1_sq = 0.45\nalpha2_sq = 0.45\n").unwrap();
        assert_eq!(cfg.params.n_bar, 0.0);
        assert_eq!(cfg.params.k_d, 0.0);
        assert_eq!(cfg.params.c, 0.0);
        assert_eq!(cfg.params.phi, 0.0);
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.sim, SimConfig::default());
        assert!((cfg.params.alpha1_abs.powi(2) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn efficiency_sum_rejected() {
        let err = parse_config("alpha1_sq = 0.8\nalpha2_sq = 0.5\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)), "{err:?}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("gamma = 1\n\n# note\nfoo = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        let err = parse_config("gamma 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_config("c = 0.1\nc = 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_config("omega_rabi = two\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_config("n_traj = -3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_config("preset = fig9\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn pi_literals() {
        assert_eq!(parse_real("pi"), Some(PI));
        assert_eq!(parse_real("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_real("-pi/2"), Some(-PI / 2.0));
        assert_eq!(parse_real("3*pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_real(" -0.25 "), Some(-0.25));
        assert_eq!(parse_real("pie"), None);
        let cfg = parse_config("theta2 = -pi/2\nphi = pi/2 # comment\n").unwrap();
        assert_eq!(cfg.params.theta2, -PI / 2.0);
        assert_eq!(cfg.params.phi, PI / 2.0);
    }

    #[test]
    fn fig3_feedback_preset() {
        let p = preset_params("fig3_feedback").unwrap();
        assert_eq!((p.gamma, p.omega_rabi, p.delta_omega), (1.0, 2.0, 0.0));
        assert_eq!((p.phi, p.theta1, p.theta2), (PI / 2.0, PI, 0.0));
        assert!((p.alpha1_abs.powi(2) - 0.45).abs() < 1e-15);
        assert!((p.alpha2_abs.powi(2) - 0.45).abs() < 1e-15);
        assert!((p.c - 0.45f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn fig2_shifts_theta2() {
        for case in 1..=4 {
            let a = preset_params(&format!("fig1_case{case}")).unwrap();
            let b = preset_params(&format!("fig2_case{case}")).unwrap();
            assert_eq!(b.theta2, a.theta2 + PI / 2.0);
            assert_eq!(PhysParams { theta2: a.theta2, ..b }, a);
        }
    }

    #[test]
    fn round_trip_all_presets() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            assert_eq!(parse_config(&render(&cfg)).unwrap(), cfg, "{name}");
        }
        let mut cfg = preset("fig1_case4").unwrap();
        cfg.preset = None;
        cfg.sim.n_traj = 7;
        cfg.sim.scheme = Scheme::Euler;
        cfg.grid.count = 33;
        assert_eq!(parse_config(&render(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn preset_line_with_overrides() {
        let cfg = parse_config("n_traj = 12\npreset = fig3_nofeedback\nt_final = 200\n").unwrap();
        assert_eq!(cfg.params, preset_params("fig3_nofeedback").unwrap());
        assert_eq!(cfg.sim.n_traj, 12);
        assert_eq!(cfg.sim.t_final, 200.0);
        assert_eq!(cfg.preset.as_deref(), Some("fig3_nofeedback"));
    }

    #[test]
    fn base_preset_from_caller() {
        let cfg = parse_config_with("n_traj = 3\n", Some("fig1_case2")).unwrap();
        assert_eq!(cfg.params, preset_params("fig1_case2").unwrap());
        assert_eq!(cfg.sim.n_traj, 3);
        assert!(parse_config_with("preset = dark\n", Some("dark")).is_err());
    }

    #[test]
    fn times_scale_with_gamma() {
        let cfg = parse_config("gamma = 2\n").unwrap();
        assert_eq!(cfg.sim.dt, 5e-4);
        assert_eq!(cfg.sim.t_final, 200.0);
        assert_eq!(cfg.sim.t_burn, 20.0);
    }
}
