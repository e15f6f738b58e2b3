//! Monte Carlo estimation on a cache of simulated terminal samples.
//!
//! One simulation pass produces a [`PathCache`]: for every path the
//! terminal state `X_T`, `S(T)` and the weights `M_T^{e_m}` for the
//! coordinate directions. Every estimator (both sides of the
//! integration-by-parts identity, entropies, shifted semigroup values,
//! kernel regression) reads from the same cache, so comparisons between
//! them use common random numbers.

mod density;
mod testfn;

use rand::Rng;
use rayon::prelude::*;

pub use density::{density_and_logderiv, kde_power_integral, silverman_bandwidth, DensityEstimate};
pub use testfn::{Base, TestFunction};

use crate::dynamics::simulate;
use crate::error::{param, Error, Result};
use crate::malliavin::basis_weights;
use crate::models::{ConstantDiffusion, DeterministicPath, DiffusionSpec, Drift, DriftModel, Vector};
use crate::rng::{self, BOOTSTRAP_STREAM};
use crate::stats::Estimate;
use crate::subordinator::{sample_positive_path, BernsteinSpec};

/// Paths per random stream. Streams are keyed by batch index, so results
/// do not depend on the number of worker threads.
pub const BATCH_SIZE: usize = 256;

/// Largest tolerated fraction of failed paths.
pub const MAX_FAILURE_RATE: f64 = 1e-3;

const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_BLOCK: usize = 64;

/// Everything needed to simulate `X_T(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub drift: Drift,
    pub diffusion: ConstantDiffusion,
    pub subordinator: BernsteinSpec,
    pub perturbation: DeterministicPath,
    pub x0: Vector,
    pub horizon: f64,
}

impl Model {
    pub fn new(
        drift: Drift,
        diffusion: ConstantDiffusion,
        subordinator: BernsteinSpec,
        x0: Vector,
        horizon: f64,
    ) -> Result<Self> {
        let model = Self {
            drift,
            diffusion,
            subordinator,
            perturbation: DeterministicPath::Zero,
            x0,
            horizon,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_perturbation(mut self, v: DeterministicPath) -> Result<Self> {
        self.perturbation = v;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.x0.len();
        self.drift.validate()?;
        self.subordinator.validate()?;
        self.perturbation.validate(d)?;
        if self.drift.dim() != d {
            return Err(Error::Dimension { expected: d, got: self.drift.dim() });
        }
        if self.diffusion.dim() != d {
            return Err(Error::Dimension { expected: d, got: self.diffusion.dim() });
        }
        if !(self.horizon > 0.0) {
            return Err(param("horizon must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    pub x_t: Vector,
    pub s_t: f64,
    /// `M_T^{e_m}` for `m = 1..d`.
    pub weights: Vec<f64>,
}

impl TerminalSample {
    /// `M_T^v` by linearity.
    pub fn weight(&self, v: &Vector) -> f64 {
        self.weights.iter().zip(v.iter()).map(|(m, c)| m * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathCache {
    pub samples: Vec<TerminalSample>,
    /// Subordinator paths resampled because `S(T)` fell below the floor.
    pub rejections: u64,
    pub failures: usize,
    pub seed: u64,
    pub n_steps: usize,
}

impl PathCache {
    /// Simulates `run.n_paths` independent paths of `model`.
    pub fn simulate(model: &Model, run: &RunConfig) -> Result<Self> {
        model.validate()?;
        if run.n_paths < 2 {
            return Err(param("at least two paths are needed"));
        }
        let n_batches = run.n_paths.div_ceil(BATCH_SIZE);
        let batches: Vec<Result<(Vec<TerminalSample>, u64, usize)>> = (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = rng::stream(run.seed, b as u64);
                let count = BATCH_SIZE.min(run.n_paths - b * BATCH_SIZE);
                let mut out = Vec::with_capacity(count);
                let (mut rejections, mut failures) = (0u64, 0usize);
                for _ in 0..count {
                    match simulate_one(model, run.n_steps, &mut rng) {
                        Ok((sample, rej)) => {
                            rejections += u64::from(rej);
                            out.push(sample);
                        }
                        Err(Error::Simulation { .. } | Error::Singular(_)) => failures += 1,
                        Err(e) => return Err(e),
                    }
                }
                Ok((out, rejections, failures))
            })
            .collect();

        let mut samples = Vec::with_capacity(run.n_paths);
        let (mut rejections, mut failures) = (0u64, 0usize);
        for batch in batches {
            let (s, r, f) = batch?;
            samples.extend(s);
            rejections += r;
            failures += f;
        }
        if failures as f64 > MAX_FAILURE_RATE * run.n_paths as f64 {
            return Err(Error::FailureRate { failed: failures, total: run.n_paths });
        }
        Ok(Self { samples, rejections, failures, seed: run.seed, n_steps: run.n_steps })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x_t.len())
    }

    pub fn s_terminal(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.s_t).collect()
    }

    fn check_direction(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    /// Monte Carlo mean of `g(X_T)`.
    pub fn mean_of(&self, g: impl Fn(&Vector) -> f64) -> Estimate {
        let values: Vec<f64> = self.samples.iter().map(|s| g(&s.x_t)).collect();
        Estimate::from_samples(&values, self.seed)
    }

    /// Per-path `<∇f(X_T), v>`.
    pub fn lhs_values(&self, f: &TestFunction, v: &Vector) -> Vec<f64> {
        self.samples.iter().map(|s| f.grad(&s.x_t).dot(v)).collect()
    }

    /// Per-path `f(X_T) M_T^v / S(T)`.
    pub fn rhs_values(&self, f: &TestFunction, v: &Vector) -> Vec<f64> {
        self.samples.iter().map(|s| f.value(&s.x_t) * s.weight(v) / s.s_t).collect()
    }

    /// `P_T(∇_v f)`.
    pub fn estimate_lhs(&self, f: &TestFunction, v: &Vector) -> Result<Estimate> {
        self.check_direction(v)?;
        Ok(Estimate::from_samples(&self.lhs_values(f, v), self.seed))
    }

    /// `E[f(X_T) M_T^v / S(T)]`.
    pub fn estimate_rhs(&self, f: &TestFunction, v: &Vector) -> Result<Estimate> {
        self.check_direction(v)?;
        Ok(Estimate::from_samples(&self.rhs_values(f, v), self.seed))
    }

    /// Both sides of the identity on the same paths; the verdict uses the
    /// per-path differences.
    pub fn verify_identity(&self, f: &TestFunction, v: &Vector) -> Result<IdentityReport> {
        self.check_direction(v)?;
        let lhs = self.lhs_values(f, v);
        let rhs = self.rhs_values(f, v);
        let diffs: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let diff = Estimate::from_samples(&diffs, self.seed);
        Ok(IdentityReport {
            lhs: Estimate::from_samples(&lhs, self.seed),
            rhs: Estimate::from_samples(&rhs, self.seed),
            pass: diff.within(0.0, 3.0),
            diff,
        })
    }

    /// Plug-in relative entropy `P(f log f) - P f log P f`, standard error
    /// from a block bootstrap.
    pub fn entropy(&self, f: &TestFunction) -> Result<Estimate> {
        let values: Vec<f64> = self.samples.iter().map(|s| f.value(&s.x_t)).collect();
        if values.iter().any(|&x| !(x >= 0.0)) {
            return Err(param(format!("entropy needs a nonnegative test function, got {}", f.name())));
        }
        let n = values.len();
        let point = plug_in_entropy(values.iter().copied())?;
        if values.iter().all(|&x| x == values[0]) {
            return Ok(Estimate::exact(0.0, n, self.seed));
        }
        let blocks: Vec<&[f64]> = values.chunks(BOOTSTRAP_BLOCK).collect();
        let mut rng = rng::stream(self.seed, BOOTSTRAP_STREAM);
        let mut reps = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let picks: Vec<usize> =
                (0..blocks.len()).map(|_| rng.random_range(0..blocks.len())).collect();
            reps.push(plug_in_entropy(picks.iter().flat_map(|&b| blocks[b].iter().copied()))?);
        }
        let spread = Estimate::from_samples(&reps, self.seed);
        let stderr = spread.stderr * (reps.len() as f64).sqrt();
        Ok(Estimate { mean: point, stderr, n, seed: self.seed })
    }
}

fn plug_in_entropy(values: impl Iterator<Item = f64> + Clone) -> Result<f64> {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    let m = sum / n as f64;
    if !(m > 0.0) {
        return Err(Error::NonPositiveMean(m));
    }
    // P(f log(f/m)) equals P(f log f) - m log m and is nonnegative by Jensen.
    // Values that underflowed to 0 contribute 0 log 0 = 0.
    Ok(values.map(|x| if x > 0.0 { x * (x / m).ln() } else { 0.0 }).sum::<f64>() / n as f64)
}

fn simulate_one<R: Rng + ?Sized>(
    model: &Model,
    n_steps: usize,
    rng: &mut R,
) -> Result<(TerminalSample, u32)> {
    let (sub, rejections) = sample_positive_path(model.subordinator, model.horizon, n_steps, rng)?;
    let bundle =
        simulate(&model.x0, &model.drift, &model.diffusion, &sub, &model.perturbation, rng)?;
    let weights = basis_weights(&bundle, &model.drift, &model.diffusion)?
        .into_iter()
        .map(|w| w.total)
        .collect();
    Ok((
        TerminalSample { x_t: bundle.terminal().clone(), s_t: bundle.s_terminal(), weights },
        rejections,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// Mean and standard error of the per-path difference.
    pub diff: Estimate,
    pub pass: bool,
}

impl IdentityReport {
    pub fn combined_stderr(&self) -> f64 {
        self.diff.stderr
    }
}

/// `P_T(∇_v f)` from a fresh simulation.
pub fn estimate_lhs(model: &Model, run: &RunConfig, f: &TestFunction, v: &Vector) -> Result<Estimate> {
    PathCache::simulate(model, run)?.estimate_lhs(f, v)
}

/// `E[f(X_T) M_T^v / S(T)]` from a fresh simulation.
pub fn estimate_rhs(model: &Model, run: &RunConfig, f: &TestFunction, v: &Vector) -> Result<Estimate> {
    PathCache::simulate(model, run)?.estimate_rhs(f, v)
}

pub fn verify_identity(
    model: &Model,
    run: &RunConfig,
    f: &TestFunction,
    v: &Vector,
) -> Result<IdentityReport> {
    PathCache::simulate(model, run)?.verify_identity(f, v)
}

pub fn entropy(model: &Model, run: &RunConfig, f: &TestFunction) -> Result<Estimate> {
    PathCache::simulate(model, run)?.entropy(f)
}
