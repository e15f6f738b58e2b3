//! Monte Carlo tools for SDEs driven by subordinate Brownian motion:
//! subordinator sampling, an Euler scheme with its Jacobian flow, the
//! integration-by-parts weight for `∇_v` of the semigroup, estimators built
//! on it, and numerical certification of the derivative, entropy and
//! shift-Harnack bounds that follow from it.

pub mod dynamics;
pub mod error;
pub mod inequalities;
pub mod malliavin;
pub mod models;
pub mod montecarlo;
pub mod report;
pub mod rng;
pub mod stats;
pub mod subordinator;

pub use dynamics::{simulate, PathBundle};
pub use error::{Error, Result};
pub use malliavin::{ibp_weight, IbpWeight, TraceForm};
pub use montecarlo::{Model, PathCache, RunConfig, TestFunction};
pub use models::{
    ConstantDiffusion, DeterministicPath, DiffusionSpec, Drift, DriftModel, Matrix, Vector,
};

pub use stats::Estimate;
pub use subordinator::{BernsteinSpec, SubordinatorPath};
