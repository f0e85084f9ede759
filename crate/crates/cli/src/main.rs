//! `fluorospec` command-line front-end.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 numerical failure,
//! 3 optimizer stopped before converging.

mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fluorospec::config::{self, RunConfig};
use fluorospec::control::{self, FreeParam, ObjectiveSpec, OptimConfig, ParamName};
use fluorospec::exec::Execution;
use fluorospec::io::{self, Format};
use fluorospec::spectrum::{self, SpectrumResult};
use fluorospec::trajectories::{self, Measure};
use fluorospec::validate::{self, Fault};
use fluorospec::{Error, Result};

use table::Table;

#[derive(Parser, Debug)]
#[command(name = "fluorospec", version, about = "Homodyne fluorescence spectra of a driven two-level atom under feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file in `key = value` format.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Start from a named parameter preset.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output file; data goes to standard output when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Print a Monte Carlo versus closed-form comparison table.
    #[arg(long, global = true)]
    compare_analytic: bool,
    /// Seed for every random draw of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    JsonLines,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureArg {
    Physical,
    Reference,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    CorruptAMatrix,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form inelastic spectrum over the μ grid.
    Spectrum,
    /// Simulate an ensemble of measurement records.
    Simulate {
        #[arg(long, value_enum, default_value = "physical")]
        measure: MeasureArg,
        /// Include the Bloch vector of each record.
        #[arg(long)]
        states: bool,
    },
    /// Spectrum estimated from simulated records.
    McSpectrum {
        /// Segment length in units of 1/γ.
        #[arg(long, default_value_t = 100.0)]
        segment: f64,
    },
    /// Stationary autocovariance of the free-channel current.
    Autocorr {
        /// Lag grid `lo:hi:count` in time units.
        #[arg(long, default_value = "0:10:201")]
        lags: String,
        /// Add Monte Carlo estimates of the second moment.
        #[arg(long)]
        empirical: bool,
    },
    /// Minimize a spectral objective over free parameters.
    Optimize {
        /// Free parameter `name:lo:hi`; repeatable.
        #[arg(long = "free", value_name = "NAME:LO:HI")]
        free: Vec<String>,
        /// `value-at-mu:MU`, `min-over-window:LO:HI:N` or `fwhm`.
        #[arg(long, default_value = "value-at-mu:0")]
        objective: String,
        /// Objective evaluations per restart.
        #[arg(long, default_value_t = OptimConfig::default().budget)]
        budget: usize,
        #[arg(long, default_value_t = OptimConfig::default().restarts)]
        restarts: usize,
        /// Exhaustive scan axis `name:lo:hi:count` instead of a search; up to two.
        #[arg(long = "grid", value_name = "NAME:LO:HI:N")]
        grid: Vec<String>,
        /// Write every evaluation as CSV to this path.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Run the invariant self-check suite.
    Validate {
        #[arg(long, value_enum, hide = true)]
        fault: Option<FaultArg>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let c = &cli.common;
    if let Command::Validate { fault } = &cli.command {
        return cmd_validate(c, fault.map(|_| Fault::CorruptAMatrix));
    }
    let cfg = load_config(c)?;
    match &cli.command {
        Command::Spectrum => cmd_spectrum(c, &cfg),
        Command::Simulate { measure, states } => cmd_simulate(c, &cfg, *measure, *states),
        Command::McSpectrum { segment } => cmd_mc_spectrum(c, &cfg, *segment),
        Command::Autocorr { lags, empirical } => cmd_autocorr(c, &cfg, lags, *empirical),
        Command::Optimize {
            free,
            objective,
            budget,
            restarts,
            grid,
            trace,
        } => {
            let spec: ObjectiveSpec = objective.parse()?;
            if grid.is_empty() {
                let free = free.iter().map(|f| f.parse()).collect::<Result<Vec<FreeParam>>>()?;
                let ocfg = OptimConfig {
                    budget: *budget,
                    restarts: *restarts,
                    seed: c.seed.unwrap_or(0),
                    execution: execution(c),
                    ..Default::default()
                };
                cmd_optimize(c, &cfg, &free, &spec, &ocfg, trace.as_deref())
            } else {
                let axes = grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>>>()?;
                cmd_scan(c, &cfg, &axes, &spec)
            }
        }
        Command::Validate { .. } => unreachable!(),
    }
}

fn execution(c: &Common) -> Execution {
    if c.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), preset) => {
            let text = io::read_to_string(path)?;
            config::parse_config_with(&text, preset.as_deref())?
        }
        (None, Some(name)) => config::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.sim.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.output = Some(out.clone());
    }
    if let Some(f) = c.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::JsonLines => Format::JsonLines,
        };
    }
    cfg.sim.execution = execution(c);
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `lo:hi:count`, accepting `pi` literals in the bounds.
fn parse_range(text: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::InvalidConfig(format!("expected `lo:hi:count`, found `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo = config::parse_real(parts[0]).ok_or_else(bad)?;
    let hi = config::parse_real(parts[1]).ok_or_else(bad)?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !(lo.is_finite() && hi.is_finite()) || (count > 1 && lo >= hi) {
        return Err(bad());
    }
    Ok((lo, hi, count))
}

fn range_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        vec![lo]
    } else {
        spectrum::linear_grid(lo, hi, count)
    }
}

fn parse_axis(text: &str) -> Result<(ParamName, Vec<f64>)> {
    let (name, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::InvalidConfig(format!("expected `name:lo:hi:count`, found `{text}`")))?;
    let name: ParamName = name.parse()?;
    let (lo, hi, count) = parse_range(rest)?;
    Ok((name, range_points(lo, hi, count)))
}

/// Writes data to `--out` (with an optional metadata sidecar) or to
/// standard output.
fn emit<F>(c: &Common, meta: Option<String>, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match &c.out {
        Some(path) => {
            io::write_atomic(path, fill)?;
            if let Some(meta) = meta {
                io::write_string_atomic(&io::sidecar_path(path), &meta)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Human-readable summary: standard output when data goes to a file,
/// standard error otherwise.
fn summary(c: &Common, text: &str) {
    if c.out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn write_spectrum(c: &Common, cfg: &RunConfig, res: &SpectrumResult) -> Result<()> {
    let meta = io::render_key_values(&spectrum::metadata(&cfg.params, res));
    emit(c, Some(meta), |w| match cfg.format {
        Format::Csv => res.write_csv(w),
        Format::JsonLines => res.write_json_lines(w),
    })
}

fn elastic_summary(res: &SpectrumResult) -> String {
    format!(
        "elastic m = {:.10}\nelastic weight = {:.10} (S_el = 2*pi*m^2 * delta(mu))\n",
        res.elastic_mean, res.elastic_weight
    )
}

fn cmd_spectrum(c: &Common, cfg: &RunConfig) -> Result<u8> {
    let grid = cfg.grid.points();
    let res = spectrum::s_inel_grid(&cfg.params, &grid)?;
    let sq = spectrum::squeezing_report(&cfg.params, &grid)?;
    write_spectrum(c, cfg, &res)?;
    summary(
        c,
        &format!(
            "{}squeezed = {}\nargmin = {}\nmin s_inel = {:.10}\n",
            elastic_summary(&res),
            sq.squeezed,
            sq.argmin,
            sq.min_value
        ),
    );
    Ok(0)
}

fn cmd_simulate(c: &Common, cfg: &RunConfig, measure: MeasureArg, states: bool) -> Result<u8> {
    let mut sim = cfg.sim.clone();
    sim.record_states = states;
    let ens = match measure {
        MeasureArg::Physical => trajectories::simulate_physical(&cfg.params, &sim)?,
        MeasureArg::Reference => trajectories::simulate_reference(&cfg.params, &sim)?,
    };
    for w in &ens.warnings {
        log::warn!("{w}");
    }
    emit(c, None, |w| match cfg.format {
        Format::Csv => ens.write_csv(w, states),
        Format::JsonLines => ens.write_json_lines(w, states),
    })?;
    let kind = match ens.measure {
        Measure::Physical => "physical",
        Measure::Reference => "reference",
    };
    summary(
        c,
        &format!(
            "{} {kind}-measure trajectories, {} records each\n",
            ens.trajectories.len(),
            ens.times.len()
        ),
    );
    Ok(0)
}

fn cmd_mc_spectrum(c: &Common, cfg: &RunConfig, segment: f64) -> Result<u8> {
    let ens = trajectories::simulate_physical(&cfg.params, &cfg.sim)?;
    for w in &ens.warnings {
        log::warn!("{w}");
    }
    let mc_cfg = spectrum::McSpectrumConfig {
        segment,
        execution: cfg.sim.execution,
        ..Default::default()
    };
    let grid = cfg.grid.points();
    let res = spectrum::mc_spectrum_with(&ens, &grid, &mc_cfg)?;
    let comparison = if c.compare_analytic {
        let exact = spectrum::s_inel_grid(&cfg.params, &grid)?;
        let stderr = res.stderr.clone().unwrap_or_default();
        let z: Vec<f64> = res
            .s_inel
            .iter()
            .zip(&exact.s_inel)
            .zip(&stderr)
            .map(|((m, a), s)| trajectories::Estimate { mean: *m, stderr: *s }.z_score(*a))
            .collect();
        let table = Table::new(vec![
            ("mu", grid.clone()),
            ("mc", res.s_inel.clone()),
            ("analytic", exact.s_inel.clone()),
            ("z", z),
        ]);
        let mut text = String::new();
        table.render_aligned(&mut text);
        Some(text)
    } else {
        None
    };
    write_spectrum(c, cfg, &res)?;
    let mut text = elastic_summary(&res);
    if let Some(table) = comparison {
        text.push_str(&table);
    }
    summary(c, &text);
    Ok(0)
}

fn cmd_autocorr(c: &Common, cfg: &RunConfig, lags: &str, empirical: bool) -> Result<u8> {
    let (lo, hi, count) = parse_range(lags)?;
    if lo < 0.0 {
        return Err(Error::InvalidConfig("lags must be non-negative".into()));
    }
    let mut lag_grid = range_points(lo, hi, count);
    let mut columns = Vec::new();
    let mut lag_steps = Vec::new();
    if empirical {
        let d = cfg.sim.record_interval();
        lag_steps = lag_grid.iter().map(|l| (l / d).round() as usize).collect();
        lag_grid = lag_steps.iter().map(|&k| k as f64 * d).collect();
    }
    let res = spectrum::autocovariance_grid(&cfg.params, &lag_grid)?;
    let second: Vec<f64> = res.values.iter().map(|v| v + res.mean * res.mean).collect();
    columns.push(("lag", lag_grid.clone()));
    columns.push(("autocov", res.values.clone()));
    columns.push(("second_moment", second));
    if empirical {
        let ens = trajectories::simulate_physical(&cfg.params, &cfg.sim)?;
        for w in &ens.warnings {
            log::warn!("{w}");
        }
        let emp = trajectories::empirical_autocorr(&ens, &lag_steps)?;
        columns.push(("empirical", emp.estimates.iter().map(|e| e.mean).collect()));
        columns.push(("stderr", emp.estimates.iter().map(|e| e.stderr).collect()));
    }
    let table = Table::new(columns);
    emit(c, None, |w| match cfg.format {
        Format::Csv => table.write_csv(w),
        Format::JsonLines => table.write_json_lines(w),
    })?;
    summary(c, &format!("stationary mean current = {:.10}\n", res.mean));
    Ok(0)
}

fn cmd_optimize(
    c: &Common,
    cfg: &RunConfig,
    free: &[FreeParam],
    spec: &ObjectiveSpec,
    ocfg: &OptimConfig,
    trace: Option<&Path>,
) -> Result<u8> {
    let res = control::optimize(&cfg.params, free, spec, ocfg)?;
    let report = res.report();
    emit(c, None, |w| Ok(w.write_all(report.as_bytes())?))?;
    if let Some(path) = trace {
        io::write_atomic(path, |w| res.write_trace_csv(w))?;
    }
    let mut text = format!("best value = {:.10}\n", res.best_value);
    for fp in free {
        text.push_str(&format!("{} = {:.10}\n", fp.name, fp.name.get(&res.best_params)));
    }
    if res.converged {
        summary(c, &text);
        Ok(0)
    } else {
        text.push_str("optimizer budget exhausted before convergence\n");
        eprint!("{text}");
        Ok(3)
    }
}

fn cmd_scan(c: &Common, cfg: &RunConfig, axes: &[(ParamName, Vec<f64>)], spec: &ObjectiveSpec) -> Result<u8> {
    let table = control::grid_scan(&cfg.params, axes, spec, cfg.sim.execution)?;
    emit(c, None, |w| table.write_csv(w))?;
    let text = match table.argmin() {
        Some((pt, v)) => {
            let mut s = format!("scan minimum = {v:.10}\n");
            for ((name, _), x) in axes.iter().zip(pt) {
                s.push_str(&format!("{name} = {x}\n"));
            }
            s
        }
        None => "objective undefined at every scan point\n".to_string(),
    };
    summary(c, &text);
    Ok(0)
}

fn cmd_validate(c: &Common, fault: Option<Fault>) -> Result<u8> {
    let seed = c.seed.unwrap_or(0);
    let report = validate::run_suite(seed, fault, execution(c));
    print!("{}", report.table());
    match report.first_failure() {
        None => Ok(0),
        Some(f) => {
            eprintln!("validation failed: {}", f.name);
            Ok(2)
        }
    }
}
