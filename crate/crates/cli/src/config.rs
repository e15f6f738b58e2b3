//! Experiment configuration: a TOML file with `model`, `run`, `task` and
//! `output` tables, every value overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subibp_core::models::{ConstantDiffusion, DeterministicPath, Drift};
use subibp_core::{BernsteinSpec, Model, RunConfig, Vector};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub task: TaskBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub drift: Drift,
    /// Rows of `σ`; identity when absent.
    #[serde(default)]
    pub sigma: Option<Vec<Vec<f64>>>,
    pub subordinator: BernsteinSpec,
    pub x0: Vec<f64>,
    pub horizon: f64,
    #[serde(default)]
    pub perturbation: DeterministicPath,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            drift: Drift::Zero { dim: 1 },
            sigma: None,
            subordinator: BernsteinSpec::DeterministicTime,
            x0: vec![0.0],
            horizon: 1.0,
            perturbation: DeterministicPath::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self { n_paths: 10_000, n_steps: 100, seed: 1, workers: 1 }
    }
}

/// Evaluation points: plain numbers in one dimension, or coordinate lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Scalars(Vec<f64>),
    Points(Vec<Vec<f64>>),
}

impl Grid {
    pub fn points(&self) -> Vec<Vector> {
        match self {
            Grid::Scalars(xs) => xs.iter().map(|&x| Vector::from_element(1, x)).collect(),
            Grid::Points(ps) => ps.iter().map(|p| Vector::from_column_slice(p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskBlock {
    /// Test-function names, e.g. `sin`, `2+sin`, `1+0.5gauss`.
    pub f: Vec<String>,
    pub v: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub delta: Vec<f64>,
    pub eval_grid: Grid,
    pub bandwidth: Option<f64>,
    /// Negative-moment orders for `moments`.
    pub moment_p: Vec<f64>,
    /// Truncation levels for `truncation-study`.
    pub eps: Vec<f64>,
    /// Gaussian streams per truncation level.
    pub streams: usize,
    /// Horizons for the `L^p` constant fit in `bounds`; empty skips it.
    pub lp_horizons: Vec<f64>,
    /// Number of path CSVs written by `simulate`.
    pub dump_paths: usize,
}

impl Default for TaskBlock {
    fn default() -> Self {
        Self {
            f: vec!["sin".into()],
            v: vec![vec![1.0]],
            p: vec![2.0],
            delta: vec![1.0],
            eval_grid: Grid::Scalars((-4..=4).map(|i| i as f64 * 0.25).collect()),
            bandwidth: None,
            moment_p: vec![0.5],
            eps: vec![1e-1, 1e-2, 1e-3],
            streams: 1000,
            lp_horizons: Vec::new(),
            dump_paths: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    /// Also write `summary.json`.
    pub json: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), json: false }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.model.x0.len()
    }

    /// Builds and validates the model.
    pub fn build_model(&self) -> Result<Model, CliError> {
        let m = &self.model;
        let d = m.x0.len();
        let diffusion = match &m.sigma {
            Some(rows) => ConstantDiffusion::from_rows(rows),
            None => ConstantDiffusion::scaled_identity(d, 1.0),
        }
        .map_err(schema)?;
        Model::new(m.drift.clone(), diffusion, m.subordinator, Vector::from_column_slice(&m.x0), m.horizon)
            .and_then(|model| model.with_perturbation(m.perturbation.clone()))
            .map_err(schema)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig { n_paths: self.run.n_paths, n_steps: self.run.n_steps, seed: self.run.seed }
    }

    pub fn directions(&self) -> Result<Vec<Vector>, CliError> {
        let d = self.dim();
        self.task
            .v
            .iter()
            .map(|v| {
                if v.len() == d {
                    Ok(Vector::from_column_slice(v))
                } else {
                    Err(CliError::Schema(format!("direction {v:?} has length {}, expected {d}", v.len())))
                }
            })
            .collect()
    }

    /// Checks the parts of the schema that serde cannot.
    pub fn validate(&self) -> Result<(), CliError> {
        self.build_model()?;
        if self.run.n_paths < 2 || self.run.n_steps == 0 {
            return Err(CliError::Schema("run.n_paths must be >= 2 and run.n_steps >= 1".into()));
        }
        self.directions()?;
        for f in &self.task.f {
            f.parse::<subibp_core::TestFunction>().map_err(schema)?;
        }
        if self.task.p.iter().any(|&p| !(p > 1.0)) {
            return Err(CliError::Schema("task.p entries must exceed 1".into()));
        }
        if self.task.delta.iter().any(|&d| !(d > 0.0)) {
            return Err(CliError::Schema("task.delta entries must be positive".into()));
        }
        if self.task.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(CliError::Schema("task.eps entries must be positive".into()));
        }
        if self.task.eval_grid.points().iter().any(|y| y.len() != self.dim()) {
            return Err(CliError::Schema("task.eval_grid points must match the state dimension".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring settings that cannot
    /// change results (worker count, output location).
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.workers = 0;
        canonical.output = OutputBlock::default();
        let value = serde_json::to_value(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

pub fn schema(e: subibp_core::Error) -> CliError {
    CliError::Schema(e.to_string())
}

/// Parses `"1,0.5"` into a vector.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| CliError::Schema(format!("bad number {c:?}: {e}"))))
        .collect()
}

/// `lo:hi:n` expands to `n` evenly spaced scalars; anything else is one
/// point given as a comma list.
pub fn parse_grid(items: &[String]) -> Result<Grid, CliError> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for item in items {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() == 3 {
            let lo: f64 = parts[0].parse().map_err(|_| CliError::Schema(format!("bad grid {item:?}")))?;
            let hi: f64 = parts[1].parse().map_err(|_| CliError::Schema(format!("bad grid {item:?}")))?;
            let n: usize = parts[2].parse().map_err(|_| CliError::Schema(format!("bad grid {item:?}")))?;
            if n < 2 {
                return Err(CliError::Schema(format!("grid {item:?} needs at least two points")));
            }
            points.extend((0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]));
        } else {
            points.push(parse_vector(item)?);
        }
    }
    if points.iter().all(|p| p.len() == 1) {
        Ok(Grid::Scalars(points.into_iter().map(|p| p[0]).collect()))
    } else {
        Ok(Grid::Points(points))
    }
}
