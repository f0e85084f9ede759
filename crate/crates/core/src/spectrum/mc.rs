//! Segment-averaged periodogram of the simulated free-channel current.
//!
//! Each post-burn window is cut into segments of length `T`. For every
//! segment the finite Fourier sum `F(μ) = Σ_k e^{iμt_k} I₂(t_k) Δ` is formed
//! and the estimate is the sample variance of `F` over all segments and
//! trajectories, divided by `T`. Subtracting the sample mean of `F` removes
//! the elastic line; the white-noise part contributes exactly 1.

use std::f64::consts::PI;

use crate::exec::{map_indexed, Execution};
use crate::trajectories::{Measure, TrajectoryEnsemble};
use crate::{Error, Result};

use super::{Provenance, SpectrumResult};

/// Minimum post-burn window, in units of `1/γ`.
pub const MIN_WINDOW: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSpectrumConfig {
    /// Segment length in units of `1/γ`.
    pub segment: f64,
    /// Fractional overlap between consecutive segments.
    pub overlap: f64,
    pub execution: Execution,
}

impl Default for McSpectrumConfig {
    fn default() -> Self {
        McSpectrumConfig {
            segment: 100.0,
            overlap: 0.5,
            execution: Execution::default(),
        }
    }
}

/// [`mc_spectrum_with`] using the default segmenting.
pub fn mc_spectrum(ens: &TrajectoryEnsemble, mu_grid: &[f64]) -> Result<SpectrumResult> {
    let cfg = McSpectrumConfig {
        execution: ens.config.execution,
        ..Default::default()
    };
    mc_spectrum_with(ens, mu_grid, &cfg)
}

pub fn mc_spectrum_with(
    ens: &TrajectoryEnsemble,
    mu_grid: &[f64],
    cfg: &McSpectrumConfig,
) -> Result<SpectrumResult> {
    if ens.measure != Measure::Physical {
        return Err(Error::InvalidConfig(
            "spectrum estimation needs a physical-measure ensemble".into(),
        ));
    }
    if !(cfg.overlap >= 0.0 && cfg.overlap < 1.0) {
        return Err(Error::InvalidConfig(format!("overlap {} outside [0, 1)", cfg.overlap)));
    }
    let gamma = ens.params.gamma;
    let sim = &ens.config;
    let window = sim.t_final - sim.t_burn;
    if window < MIN_WINDOW / gamma - 1e-9 {
        return Err(Error::InsufficientWindow {
            have: window,
            need: MIN_WINDOW / gamma,
        });
    }
    let block = sim.record_interval();
    let start = ens.first_record_after(sim.t_burn);
    let n_records = ens.times.len();
    let avail = n_records - start;
    let seg_len = ((cfg.segment / gamma / block).round() as usize).min(avail);
    if seg_len == 0 || ens.trajectories.is_empty() {
        return Err(Error::InsufficientWindow {
            have: window,
            need: cfg.segment / gamma,
        });
    }
    let hop = (((1.0 - cfg.overlap) * seg_len as f64).round() as usize).max(1);
    let seg_starts: Vec<usize> = (0..)
        .map(|j| start + j * hop)
        .take_while(|&s| s + seg_len <= n_records)
        .collect();
    let seg_time = seg_len as f64 * block;
    let n_traj = ens.trajectories.len();
    let n_seg = seg_starts.len();

    // Overlapping segments are unions of blocks of length `gcd(seg_len, hop)`;
    // each block is transformed once and shifted into every segment using it.
    let blk = gcd(seg_len, hop);
    let blocks_per_seg = seg_len / blk;
    let blocks_per_hop = hop / blk;
    let n_blocks = (n_seg - 1) * blocks_per_hop + blocks_per_seg;

    let per_mu = map_indexed(mu_grid.len(), cfg.execution, |m| {
        let mu = mu_grid[m];
        let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..blk)
            .map(|k| {
                let ph = mu * (k as f64 + 0.5) * block;
                (ph.cos() * block, ph.sin() * block)
            })
            .unzip();
        let shifts: Vec<(f64, f64)> = (0..blocks_per_seg)
            .map(|b| {
                let ph = mu * (b * blk) as f64 * block;
                (ph.cos(), ph.sin())
            })
            .collect();
        let mut coeffs = Vec::with_capacity(n_traj * n_seg);
        let mut parts = vec![(0.0, 0.0); n_blocks];
        for tr in &ens.trajectories {
            for (b, part) in parts.iter_mut().enumerate() {
                let s = start + b * blk;
                *part = block_sum(&tr.i2[s..s + blk], &cos_t, &sin_t);
            }
            for j in 0..n_seg {
                let first = j * blocks_per_hop;
                let (mut re, mut im) = (0.0, 0.0);
                for (&(br, bi), &(c, s)) in parts[first..first + blocks_per_seg].iter().zip(&shifts) {
                    re += c * br - s * bi;
                    im += s * br + c * bi;
                }
                coeffs.push((re, im));
            }
        }
        let n = coeffs.len() as f64;
        let (mr, mi) = coeffs
            .iter()
            .fold((0.0, 0.0), |(a, b), &(r, i)| (a + r / n, b + i / n));
        let bessel = if coeffs.len() > 1 { n / (n - 1.0) } else { 1.0 };
        let power: Vec<f64> = coeffs
            .iter()
            .map(|&(r, i)| ((r - mr).powi(2) + (i - mi).powi(2)) * bessel / seg_time)
            .collect();
        // Independent units for the error bar: trajectories, or segments
        // when only one trajectory is available.
        let units: Vec<f64> = if n_traj > 1 {
            power
                .chunks(n_seg)
                .map(|c| c.iter().sum::<f64>() / n_seg as f64)
                .collect()
        } else {
            power
        };
        let mean = units.iter().sum::<f64>() / units.len() as f64;
        let stderr = if units.len() > 1 {
            let var = units.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (units.len() - 1) as f64;
            (var / units.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        (mean, stderr)
    });

    let window_records = n_records - start;
    let mean_current = ens
        .trajectories
        .iter()
        .map(|tr| tr.i2[start..].iter().sum::<f64>() / window_records as f64)
        .sum::<f64>()
        / n_traj as f64;

    Ok(SpectrumResult {
        mu_grid: mu_grid.to_vec(),
        s_inel: per_mu.iter().map(|v| v.0).collect(),
        elastic_mean: mean_current,
        elastic_weight: 2.0 * PI * mean_current * mean_current,
        stderr: Some(per_mu.iter().map(|v| v.1).collect()),
        provenance: Provenance::MonteCarlo,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `(Σ x·cos, Σ x·sin)` with four independent accumulators.
fn block_sum(x: &[f64], cos_t: &[f64], sin_t: &[f64]) -> (f64, f64) {
    let mut re = [0.0; 4];
    let mut im = [0.0; 4];
    let chunks = x.len() / 4 * 4;
    for ((xs, cs), ss) in x[..chunks]
        .chunks_exact(4)
        .zip(cos_t[..chunks].chunks_exact(4))
        .zip(sin_t[..chunks].chunks_exact(4))
    {
        for l in 0..4 {
            re[l] += xs[l] * cs[l];
            im[l] += xs[l] * ss[l];
        }
    }
    let mut r = (re[0] + re[1]) + (re[2] + re[3]);
    let mut i = (im[0] + im[1]) + (im[2] + im[3]);
    for k in chunks..x.len() {
        r += x[k] * cos_t[k];
        i += x[k] * sin_t[k];
    }
    (r, i)
}
