//! The integration-by-parts weight
//!
//! ```text
//! M_T^v = < ∫ (σ_t^{-1} J_t)^* dW_{S(t)}, J_T^{-1} v >
//!       + ∫ dS(t) ∫_t^T Tr{ σ_t^{-1} J_t J_s^{-1} (∇∇_{J_s J_T^{-1} v} b_s)(X_s) J_s J_t^{-1} σ_t } ds
//! ```
//!
//! evaluated on a [`PathBundle`], so that `E[∇_v f(X_T)] = E[f(X_T) M_T^v / S(T)]`.
//!
//! Step `k` of the bundle carries the subordinator increment `ds[k]`, which
//! is treated as a jump landing on `grid[k + 1]`. The Jacobian in the
//! martingale term is taken at that node, `σ` at the left end of the step
//! (where the scheme evaluates it), and the inner `ds` integral runs over
//! the steps after the jump. With these conventions the weight is the exact
//! Gaussian divergence for the discrete scheme, so the identity carries no
//! time-discretization bias.
//!
//! The trace integrand is a similarity conjugate of `J_s^{-1} G_s J_s` and
//! hence independent of `t`; Fubini turns the double integral into
//! `Σ_j S(t_j) Δt_j Tr{J_{j+1}^{-1} G_j J_j}`. That O(n) form is the
//! default; the literal O(n²) double sum is kept for cross-checking.

use rand::Rng;

use crate::dynamics::{simulate, PathBundle};
use crate::error::{param, Error, Result};
use crate::models::{DeterministicPath, DiffusionSpec, DriftModel, Matrix, Vector};
use crate::subordinator::SubordinatorPath;

#[derive(Debug, Clone, PartialEq)]
pub struct IbpWeight {
    pub martingale_term: f64,
    pub trace_term: f64,
    /// `martingale_term + trace_term`.
    pub total: f64,
    /// `S(T)`.
    pub s_t: f64,
    pub direction: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceForm {
    #[default]
    Reduced,
    Naive,
}

/// The weight `M_T^v` for one bundle, trace term in reduced form.
pub fn ibp_weight(
    bundle: &PathBundle,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    v: &Vector,
) -> Result<IbpWeight> {
    ibp_weight_with(bundle, drift, diff, v, TraceForm::Reduced)
}

pub fn ibp_weight_with(
    bundle: &PathBundle,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    v: &Vector,
    form: TraceForm,
) -> Result<IbpWeight> {
    let d = bundle.dim();
    if v.len() != d {
        return Err(Error::Dimension { expected: d, got: v.len() });
    }
    if drift.dim() != d || diff.dim() != d {
        return Err(param("drift and diffusion must match the bundle dimension"));
    }
    let n = bundle.n_steps();
    let target = &bundle.j_inv[n] * v;

    let constant_sigma_inv = diff.is_time_constant().then(|| diff.sigma_inv(bundle.grid[0]));
    let mut jt = Vector::zeros(d);
    let mut integrand = Vector::zeros(d);
    let mut martingale_term = 0.0;
    for k in 0..n {
        if bundle.ds[k] == 0.0 {
            continue;
        }
        jt.gemv(1.0, &bundle.j[k + 1], &target, 0.0);
        match &constant_sigma_inv {
            Some(si) => integrand.gemv(1.0, si, &jt, 0.0),
            None => integrand.gemv(1.0, &diff.sigma_inv(bundle.grid[k]), &jt, 0.0),
        }
        martingale_term += bundle.dw[k].dot(&integrand);
    }

    let trace_term = if drift.is_affine() || v.iter().all(|&c| c == 0.0) {
        0.0
    } else {
        match form {
            TraceForm::Reduced => reduced_trace(bundle, drift, &target),
            TraceForm::Naive => naive_trace(bundle, drift, diff, &target),
        }
    };

    Ok(IbpWeight {
        martingale_term,
        trace_term,
        total: martingale_term + trace_term,
        s_t: bundle.s_terminal(),
        direction: v.clone(),
    })
}

/// `G_j`: the matrix of `u ↦ (∇_u ∇_{J_j J_T^{-1} v} b)(X_j)`.
fn hessian_matrix(
    bundle: &PathBundle,
    drift: &dyn DriftModel,
    j: usize,
    target: &Vector,
) -> Matrix {
    let w = &bundle.j[j] * target;
    drift.hessian_matrix(bundle.grid[j], &bundle.x[j], &w)
}

fn reduced_trace(bundle: &PathBundle, drift: &dyn DriftModel, target: &Vector) -> f64 {
    let d = bundle.dim();
    let mut conj = Matrix::zeros(d, d);
    let mut total = 0.0;
    for j in 1..bundle.n_steps() {
        if bundle.s[j] == 0.0 {
            continue;
        }
        let g = hessian_matrix(bundle, drift, j, target);
        // Tr{J_{j+1}^{-1} G J_j} = Σ_ab (J_j J_{j+1}^{-1})_ba G_ab
        conj.gemm(1.0, &bundle.j[j], &bundle.j_inv[j + 1], 0.0);
        let trace: f64 = g.iter().zip(conj.transpose().iter()).map(|(a, b)| a * b).sum();
        total += bundle.s[j] * bundle.dt(j) * trace;
    }
    total
}

fn naive_trace(
    bundle: &PathBundle,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    target: &Vector,
) -> f64 {
    let n = bundle.n_steps();
    let g: Vec<Matrix> = (0..n).map(|j| hessian_matrix(bundle, drift, j, target)).collect();
    let mut total = 0.0;
    for k in 0..n {
        if bundle.ds[k] == 0.0 {
            continue;
        }
        let t = bundle.grid[k];
        let left = diff.sigma_inv(t) * &bundle.j[k + 1];
        let right = &bundle.j_inv[k + 1] * diff.sigma(t);
        let mut inner = 0.0;
        for j in (k + 1)..n {
            let m = &left * &bundle.j_inv[j + 1] * &g[j] * &bundle.j[j] * &right;
            inner += bundle.dt(j) * m.trace();
        }
        total += bundle.ds[k] * inner;
    }
    total
}

/// Weights for every coordinate direction `e_1, .., e_d`. By linearity
/// `M^v = Σ_m v_m M^{e_m}`.
pub fn basis_weights(
    bundle: &PathBundle,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
) -> Result<Vec<IbpWeight>> {
    let d = bundle.dim();
    (0..d)
        .map(|m| {
            let mut e = Vector::zeros(d);
            e[m] = 1.0;
            ibp_weight(bundle, drift, diff, &e)
        })
        .collect()
}

/// Simulates along a fixed subordinator path `ell` (with finitely many
/// jumps) and returns the bundle with its weight.
pub fn finite_jump_weight<R: Rng + ?Sized>(
    ell: &SubordinatorPath,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    x0: &Vector,
    v: &Vector,
    rng: &mut R,
) -> Result<(PathBundle, IbpWeight)> {
    if !(ell.terminal() > 0.0) {
        return Err(param("finite-jump path must have S(T) > 0"));
    }
    let bundle = simulate(x0, drift, diff, ell, &DeterministicPath::Zero, rng)?;
    let weight = ibp_weight(&bundle, drift, diff, v)?;
    Ok((bundle, weight))
}
