//! Subordinator paths: sampling, small-jump truncation and moment oracles.
//!
//! A subordinator `S` is an increasing Lévy process with
//! `E exp(-r S(t)) = exp(-t B(r))` for its Bernstein function `B`. Two
//! families are supported: the stable subordinator `B(r) = r^(alpha/2)` and
//! deterministic time `S(t) = t`.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{param, Error, Result};
use crate::rng;
use crate::stats::Estimate;

/// Paths with `S(T)` below this floor are rejected and resampled.
pub const POSITIVITY_FLOOR: f64 = 1e-30;

const MAX_ATTEMPTS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernsteinSpec {
    /// `B(r) = r^(alpha/2)`, `alpha` in `(0, 2)`.
    Stable { alpha: f64 },
    /// `S(t) = t`.
    DeterministicTime,
}

impl BernsteinSpec {
    pub fn stable(alpha: f64) -> Result<Self> {
        let spec = BernsteinSpec::Stable { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BernsteinSpec::Stable { alpha } if !(alpha > 0.0 && alpha < 2.0) => {
                Err(param(format!("stable index alpha = {alpha} must lie in (0, 2)")))
            }
            _ => Ok(()),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            BernsteinSpec::Stable { alpha } => Some(alpha),
            BernsteinSpec::DeterministicTime => None,
        }
    }

    /// The Laplace exponent `B(r)`.
    pub fn laplace_exponent(&self, r: f64) -> f64 {
        match *self {
            BernsteinSpec::Stable { alpha } => r.powf(alpha / 2.0),
            BernsteinSpec::DeterministicTime => r,
        }
    }

    /// `E S(t)^(-p)`.
    pub fn neg_moment(&self, t: f64, p: f64) -> Result<f64> {
        match *self {
            BernsteinSpec::Stable { alpha } => neg_moment(alpha, t, p),
            BernsteinSpec::DeterministicTime => {
                if !(t > 0.0 && p > 0.0) {
                    return Err(param("neg_moment needs t > 0 and p > 0"));
                }
                Ok(t.powf(-p))
            }
        }
    }
}

/// One jump of a discretized path. `step` identifies the grid step the
/// jump belongs to; it lands on `grid[step + 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub step: usize,
    pub time: f64,
    pub size: f64,
}

/// A nondecreasing time-change path on a physical-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    grid: Vec<f64>,
    values: Vec<f64>,
    jumps: Vec<Jump>,
}

impl SubordinatorPath {
    /// `S(t) = t` on a uniform grid; no jumps.
    pub fn deterministic(horizon: f64, n_steps: usize) -> Result<Self> {
        let grid = uniform_grid(horizon, n_steps)?;
        Ok(Self { values: grid.clone(), grid, jumps: Vec::new() })
    }

    /// A pure-jump path. Each jump time must coincide with a grid node after
    /// the first.
    pub fn from_jumps(grid: Vec<f64>, mut jumps: Vec<(f64, f64)>) -> Result<Self> {
        validate_grid(&grid)?;
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut increments = vec![0.0; grid.len() - 1];
        let mut out = Vec::with_capacity(jumps.len());
        for (time, size) in jumps {
            if !(size > 0.0) {
                return Err(param(format!("jump size {size} must be positive")));
            }
            let node = grid
                .iter()
                .position(|&g| (g - time).abs() <= 1e-12 * (1.0 + time.abs()))
                .ok_or_else(|| param(format!("jump time {time} is not a grid node")))?;
            if node == 0 {
                return Err(param("a jump at t = 0 would violate S(0) = 0"));
            }
            increments[node - 1] += size;
            out.push(Jump { step: node - 1, time: grid[node], size });
        }
        let values = cumulative(&increments);
        Ok(Self { grid, values, jumps: out })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("grid has at least two nodes")
    }

    /// `S(T)`.
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("grid has at least two nodes")
    }

    /// Per-step increments `S(t_{i+1}) - S(t_i)`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Samples a path of the subordinator on a uniform grid of `n_steps` steps.
///
/// Stable increments are exact one-sided `(alpha/2)`-stable variates scaled
/// by `dt^(2/alpha)`; each step's increment is recorded as one jump.
pub fn sample_path<R: Rng + ?Sized>(
    spec: BernsteinSpec,
    horizon: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<SubordinatorPath> {
    spec.validate()?;
    let grid = uniform_grid(horizon, n_steps)?;
    match spec {
        BernsteinSpec::DeterministicTime => {
            Ok(SubordinatorPath { values: grid.clone(), grid, jumps: Vec::new() })
        }
        BernsteinSpec::Stable { alpha } => {
            let index = alpha / 2.0;
            let dt = horizon / n_steps as f64;
            let scale = dt.powf(1.0 / index);
            let increments: Vec<f64> =
                (0..n_steps).map(|_| scale * one_sided_stable(index, rng)).collect();
            let jumps = increments
                .iter()
                .enumerate()
                .filter(|(_, &s)| s > 0.0)
                .map(|(i, &s)| Jump { step: i, time: grid[i + 1], size: s })
                .collect();
            let values = cumulative(&increments);
            Ok(SubordinatorPath { grid, values, jumps })
        }
    }
}

/// Like [`sample_path`] but rejects paths with `S(T)` below
/// [`POSITIVITY_FLOOR`]. Returns the path and the number of rejections.
pub fn sample_positive_path<R: Rng + ?Sized>(
    spec: BernsteinSpec,
    horizon: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<(SubordinatorPath, u32)> {
    for attempt in 0..MAX_ATTEMPTS {
        let path = sample_path(spec, horizon, n_steps, rng)?;
        if path.terminal() >= POSITIVITY_FLOOR {
            return Ok((path, attempt));
        }
    }
    Err(Error::Degenerate { attempts: MAX_ATTEMPTS })
}

/// Kanter's representation of a one-sided stable variate with
/// `E exp(-r X) = exp(-r^index)`, `index` in `(0, 1)`.
pub fn one_sided_stable<R: Rng + ?Sized>(index: f64, rng: &mut R) -> f64 {
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let a = index;
    let head = (a * u).sin() / u.sin().powf(1.0 / a);
    let tail = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
    head * tail
}

/// Drops every jump smaller than `eps`. The continuous part of the path
/// (if any) is kept.
pub fn truncate_small_jumps(path: &SubordinatorPath, eps: f64) -> Result<SubordinatorPath> {
    if !(eps > 0.0) {
        return Err(param(format!("truncation level eps = {eps} must be positive")));
    }
    let mut dropped = vec![0.0; path.n_steps()];
    let mut kept = Vec::with_capacity(path.jumps.len());
    for jump in &path.jumps {
        if jump.size >= eps {
            kept.push(*jump);
        } else {
            dropped[jump.step] += jump.size;
        }
    }
    let dropped = cumulative(&dropped);
    let values = path
        .values
        .iter()
        .zip(&dropped)
        .map(|(v, d)| (v - d).max(0.0))
        .collect::<Vec<_>>();
    // Cumulative subtraction can leave rounding-level decreases.
    let values = values
        .iter()
        .scan(0.0f64, |hi, &v| {
            *hi = hi.max(v);
            Some(*hi)
        })
        .collect();
    Ok(SubordinatorPath { grid: path.grid.clone(), values, jumps: kept })
}

/// Total size of the jumps removed by truncation at `eps`.
pub fn discarded_mass(path: &SubordinatorPath, eps: f64) -> f64 {
    path.jumps.iter().filter(|j| j.size < eps).map(|j| j.size).sum()
}

/// `E S(t)^(-p)` for the stable subordinator:
/// `2 Γ(2p/alpha) / (alpha Γ(p)) * t^(-2p/alpha)`.
pub fn neg_moment(alpha: f64, t: f64, p: f64) -> Result<f64> {
    BernsteinSpec::stable(alpha)?;
    if !(t > 0.0 && p > 0.0) {
        return Err(param("neg_moment needs t > 0 and p > 0"));
    }
    Ok(2.0 * gamma(2.0 * p / alpha) / (alpha * gamma(p)) * t.powf(-2.0 * p / alpha))
}

/// Result of an exponential inverse-moment estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpMoment {
    Finite(Estimate),
    /// The running sum overflowed.
    Diverged,
}

impl ExpMoment {
    pub fn estimate(&self) -> Option<Estimate> {
        match self {
            ExpMoment::Finite(e) => Some(*e),
            ExpMoment::Diverged => None,
        }
    }
}

/// Monte Carlo estimate of `E exp(lambda / S(t))` for the stable
/// subordinator with `alpha` in `(1, 2)`, where the moment is finite.
pub fn exp_inv_moment(
    alpha: f64,
    t: f64,
    lambda: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ExpMoment> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(param(format!("exp_inv_moment needs alpha in (1, 2), got {alpha}")));
    }
    if !(lambda >= 0.0) || !(t > 0.0) || n_samples < 2 {
        return Err(param("exp_inv_moment needs lambda >= 0, t > 0, n_samples >= 2"));
    }
    let samples = sample_terminal_values(BernsteinSpec::Stable { alpha }, t, n_samples, seed)?;
    Ok(exp_inv_moment_from_samples(&samples, lambda, seed))
}

/// `E exp(lambda / S)` over given samples of `S`.
pub fn exp_inv_moment_from_samples(s: &[f64], lambda: f64, seed: u64) -> ExpMoment {
    if lambda == 0.0 {
        return ExpMoment::Finite(Estimate::exact(1.0, s.len(), seed));
    }
    let values: Vec<f64> = s.iter().map(|&x| (lambda / x).exp()).collect();
    let total: f64 = values.iter().sum();
    if !total.is_finite() {
        return ExpMoment::Diverged;
    }
    let est = Estimate::from_samples(&values, seed);
    if est.stderr.is_finite() {
        ExpMoment::Finite(est)
    } else {
        ExpMoment::Diverged
    }
}

/// Independent samples of `S(t)`, one stream per sample.
pub fn sample_terminal_values(
    spec: BernsteinSpec,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(param("horizon must be positive"));
    }
    let mut rng = rng::stream(seed, 0);
    (0..n_samples)
        .map(|_| sample_positive_path(spec, t, 1, &mut rng).map(|(p, _)| p.terminal()))
        .collect()
}

/// The exponent multiplying the envelope constant in
/// `E exp(lambda/S(t)) <= exp[c (lambda t^(-2/alpha) + lambda^(alpha/(2(alpha-1))) t^(-1/(alpha-1)))]`.
pub fn exp_envelope_shape(alpha: f64, t: f64, lambda: f64) -> f64 {
    lambda / t.powf(2.0 / alpha)
        + lambda.powf(alpha / (2.0 * (alpha - 1.0))) / t.powf(1.0 / (alpha - 1.0))
}

/// Smallest `c` for which every `(lambda, value)` pair sits under the
/// exponential envelope.
pub fn fit_exp_envelope(alpha: f64, t: f64, points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .filter(|(lambda, _)| *lambda > 0.0)
        .map(|&(lambda, value)| value.ln().max(0.0) / exp_envelope_shape(alpha, t, lambda))
        .fold(0.0, f64::max)
}

fn uniform_grid(horizon: f64, n_steps: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(param(format!("horizon {horizon} must be positive")));
    }
    if n_steps == 0 {
        return Err(param("n_steps must be at least 1"));
    }
    let dt = horizon / n_steps as f64;
    let mut grid: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
    grid[n_steps] = horizon;
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(param("grid must start at 0 and have at least two nodes"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(param("grid must be strictly increasing"));
    }
    Ok(())
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(increments.iter().scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        }))
        .collect()
}
