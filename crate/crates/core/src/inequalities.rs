//! Closed-form bounds for the semigroup gradient, the entropy bound and the
//! shift-Harnack inequality, and their Monte Carlo certification on a
//! [`PathCache`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::function::gamma::gamma;

use crate::error::{param, Error, Result};
use crate::models::{DiffusionSpec, DriftModel, Vector};
use crate::montecarlo::{Model, PathCache, TestFunction};
use crate::stats::{log_mean_exp, ols_slope, Estimate};
use crate::subordinator::BernsteinSpec;

/// Model constants evaluated at the horizon, plus the free parameters of
/// the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub horizon: f64,
    pub dim: usize,
    pub k1: f64,
    pub k2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Stable index, `None` for deterministic time.
    pub alpha: Option<f64>,
    pub p: f64,
    pub delta: f64,
    pub v: Vector,
}

impl BoundInputs {
    pub fn from_model(model: &Model, p: f64, delta: f64, v: Vector) -> Result<Self> {
        let t = model.horizon;
        let inputs = Self {
            horizon: t,
            dim: model.dim(),
            k1: model.drift.k1(t),
            k2: model.drift.k2(t),
            lambda1: model.diffusion.lambda1(t),
            lambda2: model.diffusion.lambda2(t),
            alpha: model.subordinator.alpha(),
            p,
            delta,
            v,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(param(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.delta > 0.0) {
            return Err(param(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.horizon > 0.0) {
            return Err(param("horizon must be positive"));
        }
        if self.v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: self.v.len() });
        }
        let consts = [self.k1, self.k2, self.lambda1, self.lambda2];
        if consts.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(param("K1, K2, lambda1, lambda2 must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn spec(&self) -> BernsteinSpec {
        match self.alpha {
            Some(alpha) => BernsteinSpec::Stable { alpha },
            None => BernsteinSpec::DeterministicTime,
        }
    }

    /// `E S(T)^(-q)`.
    pub fn neg_moment(&self, q: f64) -> Result<f64> {
        self.spec().neg_moment(self.horizon, q)
    }

    fn v_norm(&self) -> f64 {
        self.v.norm()
    }

    fn exp_k1(&self, factor: f64) -> f64 {
        (factor * self.horizon * self.k1).exp()
    }

    fn params(&self) -> serde_json::Value {
        json!({
            "T": self.horizon,
            "d": self.dim,
            "K1": self.k1,
            "K2": self.k2,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "alpha": self.alpha,
            "p": self.p,
            "delta": self.delta,
            "v": self.v.as_slice(),
        })
    }
}

/// `β(T) = d T λ1 λ2 K2 e^{3 T K1}`.
pub fn beta_t(inputs: &BoundInputs) -> f64 {
    inputs.dim as f64
        * inputs.horizon
        * inputs.lambda1
        * inputs.lambda2
        * inputs.k2
        * inputs.exp_k1(3.0)
}

/// `|v| (λ2 e^{T K1} E S(T)^{-1/2} + β(T))`, the factor multiplying `‖f‖_∞`.
pub fn grad_bound(inputs: &BoundInputs, neg_moment_half: f64) -> f64 {
    inputs.v_norm() * (inputs.lambda2 * inputs.exp_k1(1.0) * neg_moment_half + beta_t(inputs))
}

/// Exponent `p / (2(p-1))` of the negative moment in the `L^p` bound.
pub fn lp_exponent(p: f64) -> f64 {
    p / (2.0 * (p - 1.0))
}

/// Shape `λ2 e^{T K1} (E S(T)^{-p/(2(p-1))})^{(p-1)/p} + β(T)` of the
/// `L^p` gradient bound; the absolute constant is fitted separately.
pub fn lp_grad_bound(inputs: &BoundInputs, p: f64, neg_moment_p: f64) -> f64 {
    inputs.lambda2 * inputs.exp_k1(1.0) * neg_moment_p.powf((p - 1.0) / p) + beta_t(inputs)
}

/// One observation for the `L^p` constant fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpObservation {
    pub horizon: f64,
    /// `|P_T(∇_v f)| / |v|`.
    pub gradient: f64,
    /// `(P_T |f|^p)^{1/p}`.
    pub lp_norm: f64,
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpFit {
    /// Smallest admissible constant per horizon, in input order of first
    /// appearance.
    pub per_horizon: Vec<(f64, f64)>,
    pub constant: f64,
    /// Max over min of the per-horizon constants.
    pub spread: f64,
    /// `spread <= 3`.
    pub stable: bool,
}

/// Fits the smallest `Ĉ` with `gradient <= Ĉ lp_norm shape` on every
/// observation and checks that the per-horizon constants agree within a
/// factor 3.
pub fn fit_lp_constant(observations: &[LpObservation]) -> Result<LpFit> {
    if observations.is_empty() {
        return Err(param("no observations to fit"));
    }
    let mut per_horizon: Vec<(f64, f64)> = Vec::new();
    for o in observations {
        let c = o.gradient / (o.lp_norm * o.shape);
        if !c.is_finite() {
            return Err(param("degenerate L^p observation"));
        }
        match per_horizon.iter_mut().find(|(t, _)| *t == o.horizon) {
            Some(entry) => entry.1 = entry.1.max(c),
            None => per_horizon.push((o.horizon, c)),
        }
    }
    let constant = per_horizon.iter().map(|e| e.1).fold(0.0, f64::max);
    let smallest = per_horizon.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let spread = constant / smallest;
    Ok(LpFit { per_horizon, constant, spread, stable: spread <= 3.0 })
}

/// One certified inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub id: String,
    pub params_json: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs)` in units of the standard error used for the verdict.
    pub margin_sigma: f64,
    pub pass: bool,
}

fn margin(slack: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        slack / sigma
    } else if slack >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

fn check_cache(cache: &PathCache, inputs: &BoundInputs) -> Result<()> {
    inputs.validate()?;
    if cache.is_empty() {
        return Err(param("empty path cache"));
    }
    if cache.dim() != inputs.dim {
        return Err(Error::Dimension { expected: inputs.dim, got: cache.dim() });
    }
    Ok(())
}

/// `|P_T(∇_v f)| <= ‖f‖_∞ grad_bound + 3 stderr`.
pub fn grad_bound_check(
    cache: &PathCache,
    f: &TestFunction,
    inputs: &BoundInputs,
) -> Result<Certification> {
    check_cache(cache, inputs)?;
    let est = cache.estimate_lhs(f, &inputs.v)?;
    let rhs = f.sup_norm() * grad_bound(inputs, inputs.neg_moment(0.5)?);
    let lhs = est.mean.abs();
    let mut params = inputs.params();
    params["f"] = json!(f.name());
    Ok(Certification {
        id: "grad_sup".into(),
        params_json: params.to_string(),
        lhs,
        rhs,
        margin_sigma: margin(rhs - lhs, est.stderr),
        pass: lhs <= rhs + 3.0 * est.stderr,
    })
}

/// The observation for [`fit_lp_constant`] at `inputs.p`.
pub fn lp_observation(
    cache: &PathCache,
    f: &TestFunction,
    inputs: &BoundInputs,
) -> Result<LpObservation> {
    check_cache(cache, inputs)?;
    let vn = inputs.v_norm();
    if vn == 0.0 {
        return Err(param("L^p observation needs v != 0"));
    }
    let p = inputs.p;
    let grad = cache.estimate_lhs(f, &inputs.v)?;
    let moment = cache.mean_of(|x| f.value(x).abs().powf(p));
    Ok(LpObservation {
        horizon: inputs.horizon,
        gradient: grad.mean.abs() / vn,
        lp_norm: moment.mean.powf(1.0 / p),
        shape: lp_grad_bound(inputs, p, inputs.neg_moment(lp_exponent(p))?),
    })
}

/// `log E exp(lambda / S)` over samples of `S`, with the relative standard
/// error of the underlying mean.
pub fn log_exp_inv_moment(s: &[f64], lambda: f64) -> (f64, f64) {
    if lambda == 0.0 || s.is_empty() {
        return (0.0, 0.0);
    }
    let exps: Vec<f64> = s.iter().map(|&x| lambda / x).collect();
    let log_mean = log_mean_exp(exps.iter().copied());
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = exps.iter().map(|e| (e - max).exp()).collect();
    let est = Estimate::from_samples(&scaled, 0);
    (log_mean, est.stderr / est.mean)
}

/// Coefficient of `r^2 / S(T)` in the exponent of `Γ_{T,p}(r)`.
fn gamma_coefficient(inputs: &BoundInputs) -> f64 {
    let p = inputs.p;
    p * p * inputs.lambda2.powi(2) * inputs.exp_k1(2.0) / (2.0 * (p - 1.0).powi(2))
}

/// `Γ_{T,p}(r) = E exp[p² λ2² e^{2 T K1} r² / (2 (p-1)² S(T))]` over the
/// given samples of `S(T)`.
pub fn gamma_tp(inputs: &BoundInputs, r: f64, s_samples: &[f64], seed: u64) -> Result<Estimate> {
    inputs.validate()?;
    let (log_g, rel) = log_exp_inv_moment(s_samples, gamma_coefficient(inputs) * r * r);
    let mean = log_g.exp();
    if !mean.is_finite() {
        return Err(Error::Quadrature(format!("Γ_{{T,p}}({r}) overflowed")));
    }
    Ok(Estimate { mean, stderr: mean * rel, n: s_samples.len(), seed })
}

/// `log Γ_{T,p}(r)` and its relative standard error.
pub fn log_gamma_tp(inputs: &BoundInputs, r: f64, s_samples: &[f64]) -> (f64, f64) {
    log_exp_inv_moment(s_samples, gamma_coefficient(inputs) * r * r)
}

/// `p log(p) β(T) r / (p-1) + ((p-1)/p) log Γ`.
pub fn harnack_log_factor(inputs: &BoundInputs, r: f64, log_gamma: f64) -> f64 {
    let p = inputs.p;
    p * p.ln() * beta_t(inputs) * r / (p - 1.0) + (p - 1.0) / p * log_gamma
}

fn check_exp_moment(inputs: &BoundInputs) -> Option<&'static str> {
    match inputs.alpha {
        Some(a) if !(a > 1.0 && a < 2.0) => Some("exponential inverse moment diverges for alpha <= 1"),
        _ => None,
    }
}

/// `|P_T(∇_v f)| <= δ Ent(f) + P_T f (β|v| + δ log E exp[λ2² |v|² e^{2TK1} / (2 δ² S)])`.
pub fn entropy_bound_check(
    cache: &PathCache,
    f: &TestFunction,
    inputs: &BoundInputs,
) -> Result<Certification> {
    check_cache(cache, inputs)?;
    if !f.is_positive() {
        return Err(param(format!("entropy bound needs a positive test function, got {}", f.name())));
    }
    let mut params = inputs.params();
    params["f"] = json!(f.name());
    let grad = cache.estimate_lhs(f, &inputs.v)?;
    let lhs = grad.mean.abs();
    if let Some(reason) = check_exp_moment(inputs) {
        params["skipped"] = json!(reason);
        return Ok(Certification {
            id: "entropy".into(),
            params_json: params.to_string(),
            lhs,
            rhs: f64::INFINITY,
            margin_sigma: f64::INFINITY,
            pass: true,
        });
    }
    let vn = inputs.v_norm();
    let d = inputs.delta;
    let ent = cache.entropy(f)?;
    let pf = cache.mean_of(|x| f.value(x));
    let lambda = inputs.lambda2.powi(2) * vn * vn * inputs.exp_k1(2.0) / (2.0 * d * d);
    let (log_moment, rel_moment) = log_exp_inv_moment(&cache.s_terminal(), lambda);
    if !log_moment.is_finite() {
        params["skipped"] = json!("exponential inverse moment overflowed");
        return Ok(Certification {
            id: "entropy".into(),
            params_json: params.to_string(),
            lhs,
            rhs: f64::INFINITY,
            margin_sigma: f64::INFINITY,
            pass: true,
        });
    }
    let bracket = beta_t(inputs) * vn + d * log_moment;
    let rhs = d * ent.mean + pf.mean * bracket;
    // Standard errors of the three estimated pieces, combined as if
    // independent, plus the left side's.
    let sigma = (grad.stderr.powi(2)
        + (d * ent.stderr).powi(2)
        + (pf.stderr * bracket).powi(2)
        + (pf.mean * d * rel_moment).powi(2))
    .sqrt();
    Ok(Certification {
        id: "entropy".into(),
        params_json: params.to_string(),
        lhs,
        rhs,
        margin_sigma: margin(rhs - lhs, sigma),
        pass: lhs <= rhs + 3.0 * sigma,
    })
}

/// Shift-Harnack: `(P_T f)^p <= exp[harnack_log_factor] P_T(f^p(v + ·))`,
/// both semigroup values from the same cache. Passes when
/// `lhs <= rhs (1 + 3 rel)` with `rel` the combined relative standard error.
pub fn shift_harnack_check(
    cache: &PathCache,
    f: &TestFunction,
    inputs: &BoundInputs,
) -> Result<Certification> {
    check_cache(cache, inputs)?;
    if !f.is_positive() {
        return Err(param(format!("shift-Harnack needs a positive test function, got {}", f.name())));
    }
    if let Some(reason) = check_exp_moment(inputs) {
        return Err(param(reason));
    }
    let p = inputs.p;
    let vn = inputs.v_norm();
    let pf = cache.mean_of(|x| f.value(x));
    let shifted = cache.mean_of(|x| f.value(&(x + &inputs.v)).powf(p));
    let (log_gamma, rel_gamma) = log_gamma_tp(inputs, vn, &cache.s_terminal());
    let log_factor = harnack_log_factor(inputs, vn, log_gamma);
    let lhs = pf.mean.powf(p);
    let rhs = log_factor.exp() * shifted.mean;
    let rel = ((p * pf.stderr / pf.mean).powi(2)
        + (shifted.stderr / shifted.mean).powi(2)
        + ((p - 1.0) / p * rel_gamma).powi(2))
    .sqrt();
    let mut params = inputs.params();
    params["f"] = json!(f.name());
    params["log_gamma"] = json!(log_gamma);
    Ok(Certification {
        id: "shift_harnack".into(),
        params_json: params.to_string(),
        lhs,
        rhs,
        margin_sigma: margin(rhs - lhs, rhs * rel),
        pass: lhs <= rhs * (1.0 + 3.0 * rel),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelBound {
    /// `(∫ exp[-harnack_log_factor(|v|)] dv)^{-1/(p-1)}`.
    pub bound: f64,
    pub integral: f64,
    /// Radius at which the radial integral was truncated.
    pub radius: f64,
}

/// Area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Upper bound on `sup_x ∫ p_T(x, y)^{p/(p-1)} dy`, integrating the
/// Harnack factor radially with `Γ_{T,p}` estimated from `s_samples`.
pub fn heat_kernel_integral_bound(inputs: &BoundInputs, s_samples: &[f64]) -> Result<HeatKernelBound> {
    inputs.validate()?;
    if let Some(reason) = check_exp_moment(inputs) {
        return Err(param(reason));
    }
    if s_samples.is_empty() {
        return Err(param("no subordinator samples"));
    }
    let d = inputs.dim;
    let area = sphere_area(d);
    let integrand = |r: f64| {
        let (log_gamma, _) = log_gamma_tp(inputs, r, s_samples);
        area * r.powi(d as i32 - 1) * (-harnack_log_factor(inputs, r, log_gamma)).exp()
    };
    let piece = |a: f64, b: f64| -> Result<f64> {
        let out = quadrature::integrate(integrand, a, b, 1e-12);
        if !out.integral.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
        }
        Ok(out.integral)
    };
    let mut radius = 0.5 * inputs.horizon.powf(1.0 / inputs.alpha.unwrap_or(2.0));
    let mut total = piece(0.0, radius)?;
    for _ in 0..60 {
        let extra = piece(radius, 2.0 * radius)?;
        total += extra;
        radius *= 2.0;
        if extra.abs() <= 1e-10 * total {
            if !(total > 0.0) {
                return Err(Error::Quadrature(format!("integral {total} is not positive")));
            }
            return Ok(HeatKernelBound {
                bound: total.powf(-1.0 / (inputs.p - 1.0)),
                integral: total,
                radius,
            });
        }
    }
    Err(Error::Quadrature(format!("radial integral did not settle by radius {radius}, total {total}")))
}

/// The `T`-independent bracket `p log p/(p-1)² + p^{1/(α-1)}/(p-1)^{α/(α-1)}`
/// of the closed-form heat-kernel envelope.
pub fn heat_kernel_envelope_shape(alpha: f64, p: f64) -> f64 {
    p * p.ln() / (p - 1.0).powi(2) + p.powf(1.0 / (alpha - 1.0)) / (p - 1.0).powf(alpha / (alpha - 1.0))
}

/// `(1 ∧ T)^{-d/(α(p-1))} exp[C shape]`.
pub fn heat_kernel_envelope(alpha: f64, p: f64, d: usize, t: f64, c: f64) -> f64 {
    t.min(1.0).powf(-(d as f64) / (alpha * (p - 1.0))) * (c * heat_kernel_envelope_shape(alpha, p)).exp()
}

/// Smallest `C >= 0` putting every `(T, bound)` pair under the envelope.
pub fn fit_heat_kernel_envelope(alpha: f64, p: f64, d: usize, points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|&(t, bound)| {
            let log_ratio = bound.ln() - heat_kernel_envelope(alpha, p, d, t, 0.0).ln();
            log_ratio / heat_kernel_envelope_shape(alpha, p)
        })
        .fold(0.0, f64::max)
}

/// Log-log slope of the bound against `T`; the envelope predicts
/// `-d/(α(p-1))` for `T <= 1`.
pub fn heat_kernel_slope(points: &[(f64, f64)]) -> f64 {
    let x: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, b)| b.ln()).collect();
    ols_slope(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ConstantDiffusion, Drift};
    use crate::montecarlo::RunConfig;
    use crate::subordinator::{neg_moment, sample_terminal_values};

    fn inputs(d: usize, t: f64, l1: f64, l2: f64, k1: f64, k2: f64) -> BoundInputs {
        BoundInputs {
            horizon: t,
            dim: d,
            k1,
            k2,
            lambda1: l1,
            lambda2: l2,
            alpha: Some(1.5),
            p: 2.0,
            delta: 1.0,
            v: Vector::from_element(d, 1.0 / (d as f64).sqrt()),
        }
    }

    #[test]
    fn beta_examples() {
        assert!((beta_t(&inputs(1, 1.0, 1.0, 1.0, 0.0, 1.0)) - 1.0).abs() < 1e-15);
        let b = beta_t(&inputs(2, 1.0, 2.0, 1.0, 1.0, 0.5));
        assert!((b - 2.0 * 3f64.exp()).abs() < 1e-12);
        assert_eq!(beta_t(&inputs(2, 1.0, 2.0, 1.0, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn grad_bound_gaussian_free() {
        let mut i = inputs(1, 1.0, 1.0, 1.0, 0.0, 0.0);
        i.alpha = Some(1.0);
        let bound = grad_bound(&i, neg_moment(1.0, 1.0, 0.5).unwrap());
        assert!((bound - 2.0 / PI.sqrt()).abs() < 1e-12);
        i.v = Vector::zeros(1);
        assert_eq!(grad_bound(&i, 1.0), 0.0);
    }

    #[test]
    fn lp_exponent_limits() {
        assert_eq!(lp_exponent(2.0), 1.0);
        assert!((lp_exponent(1e9) - 0.5).abs() < 1e-8);
        assert!((neg_moment(1.0, 1.0, lp_exponent(2.0)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_is_one_at_zero_and_monotone() {
        let i = inputs(1, 1.0, 1.0, 1.0, 0.0, 0.0);
        let s = sample_terminal_values(BernsteinSpec::Stable { alpha: 1.5 }, 1.0, 5000, 3).unwrap();
        let g0 = gamma_tp(&i, 0.0, &s, 3).unwrap();
        assert_eq!(g0.mean, 1.0);
        assert_eq!(g0.stderr, 0.0);
        let gs: Vec<f64> =
            [0.1, 0.25, 0.5, 1.0].iter().map(|&r| gamma_tp(&i, r, &s, 3).unwrap().mean).collect();
        assert!(gs.windows(2).all(|w| w[1] >= w[0] && w[0] >= 1.0), "{gs:?}");
    }

    #[test]
    fn harnack_at_zero_shift_is_jensen() {
        let i = inputs(1, 1.0, 1.0, 1.0, 0.0, 0.5);
        assert_eq!(harnack_log_factor(&i, 0.0, 0.0), 0.0);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-12);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_bound_gaussian_time() {
        // S(T) = T, β = 0: Γ(r) = exp(2 r²/T) at p = 2, so the integrand
        // is exp(-r²/T) and the integral is sqrt(π T).
        let mut i = inputs(1, 0.5, 1.0, 1.0, 0.0, 0.0);
        i.alpha = None;
        let hk = heat_kernel_integral_bound(&i, &[0.5]).unwrap();
        assert!((hk.integral - (PI * 0.5).sqrt()).abs() < 1e-8, "{hk:?}");
    }

    #[test]
    fn constant_function_certifications_pass() {
        let model = Model::new(
            Drift::DampedSine { dim: 1, a: 1.0, b: 0.5 },
            ConstantDiffusion::scaled_identity(1, 1.0).unwrap(),
            BernsteinSpec::Stable { alpha: 1.5 },
            Vector::from_element(1, 0.1),
            1.0,
        )
        .unwrap();
        let cache = PathCache::simulate(&model, &RunConfig { n_paths: 512, n_steps: 20, seed: 4 })
            .unwrap();
        let i = BoundInputs::from_model(&model, 2.0, 1.0, Vector::from_element(1, 0.5)).unwrap();
        let f = TestFunction::constant(3.0);
        let e = entropy_bound_check(&cache, &f, &i).unwrap();
        assert!(e.pass && e.lhs == 0.0, "{e:?}");
        let h = shift_harnack_check(&cache, &f, &i).unwrap();
        assert!(h.pass && h.rhs >= h.lhs, "{h:?}");
    }

    #[test]
    fn lp_fit_flags_instability() {
        let obs = |t, g| LpObservation { horizon: t, gradient: g, lp_norm: 1.0, shape: 1.0 };
        let fit = fit_lp_constant(&[obs(0.25, 1.0), obs(1.0, 2.0), obs(1.0, 1.5)]).unwrap();
        assert_eq!(fit.constant, 2.0);
        assert!(fit.stable);
        let fit = fit_lp_constant(&[obs(0.25, 1.0), obs(1.0, 4.0)]).unwrap();
        assert!(!fit.stable);
    }
}
