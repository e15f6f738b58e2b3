//! Kernel density of `X_T` and Nadaraya–Watson regression of `-M_T^v/S(T)`
//! on `X_T`, which estimates `∇_v log p_T(x, ·)`.

use std::f64::consts::PI;

use super::PathCache;
use crate::error::{param, Result};
use crate::models::Vector;
use crate::stats::quantile;

/// Kernel mass below which an evaluation point is flagged as empty.
const EMPTY_WINDOW: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub eval_points: Vec<Vector>,
    pub density: Vec<f64>,
    /// Kernel-regression estimate of `∇_v log p_T(x, ·)(y)`; NaN where flagged.
    pub log_deriv: Vec<f64>,
    /// Central difference of `log p̂` along `v`.
    pub log_deriv_fd: Vec<f64>,
    /// Points whose kernel window holds no samples.
    pub flagged: Vec<bool>,
    pub bandwidth: f64,
}

/// Silverman's rule, with a robust spread `min(sd, IQR/1.34)` per
/// coordinate averaged over coordinates.
pub fn silverman_bandwidth(cache: &PathCache) -> f64 {
    let d = cache.dim();
    let n = cache.len() as f64;
    let spread: f64 = (0..d)
        .map(|i| {
            let mut xs: Vec<f64> = cache.samples.iter().map(|s| s.x_t[i]).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            xs.sort_by(f64::total_cmp);
            let iqr = quantile(&xs, 0.75) - quantile(&xs, 0.25);
            sd.min(iqr / 1.34)
        })
        .sum::<f64>()
        / d as f64;
    if d == 1 {
        0.9 * spread * n.powf(-0.2)
    } else {
        let df = d as f64;
        (4.0 / (df + 2.0)).powf(1.0 / (df + 4.0)) * spread * n.powf(-1.0 / (df + 4.0))
    }
}

struct Kernel<'a> {
    cache: &'a PathCache,
    h: f64,
    /// Samples sorted by first coordinate, for windowed sums.
    order: Vec<usize>,
    first: Vec<f64>,
    norm: f64,
}

impl<'a> Kernel<'a> {
    fn new(cache: &'a PathCache, h: f64) -> Self {
        let mut order: Vec<usize> = (0..cache.len()).collect();
        order.sort_by(|&a, &b| cache.samples[a].x_t[0].total_cmp(&cache.samples[b].x_t[0]));
        let first = order.iter().map(|&i| cache.samples[i].x_t[0]).collect();
        let d = cache.dim() as i32;
        let norm = 1.0 / (cache.len() as f64 * (2.0 * PI).powf(d as f64 / 2.0) * h.powi(d));
        Self { cache, h, order, first, norm }
    }

    /// `(Σ K, Σ K r)` over samples within 8h in the first coordinate.
    fn sums(&self, y: &Vector, r: &[f64]) -> (f64, f64) {
        let lo = self.first.partition_point(|&x| x < y[0] - 8.0 * self.h);
        let hi = self.first.partition_point(|&x| x <= y[0] + 8.0 * self.h);
        let inv = 1.0 / (2.0 * self.h * self.h);
        let mut sk = 0.0;
        let mut skr = 0.0;
        for &i in &self.order[lo..hi] {
            let dist2 = (&self.cache.samples[i].x_t - y).norm_squared();
            let k = (-dist2 * inv).exp();
            sk += k;
            if !r.is_empty() {
                skr += k * r[i];
            }
        }
        (sk, skr)
    }

    fn density(&self, y: &Vector) -> f64 {
        self.sums(y, &[]).0 * self.norm
    }
}

/// KDE of `X_T` and kernel regression of `-M_T^v/S(T)` at `eval_points`.
/// Only dimensions 1 and 2 are supported.
pub fn density_and_logderiv(
    cache: &PathCache,
    v: &Vector,
    eval_points: &[Vector],
    bandwidth: Option<f64>,
) -> Result<DensityEstimate> {
    let d = cache.dim();
    if !(1..=2).contains(&d) {
        return Err(param(format!("kernel regression supports d = 1 or 2, got {d}")));
    }
    if v.len() != d || eval_points.iter().any(|y| y.len() != d) {
        return Err(param("direction and evaluation points must match the state dimension"));
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(cache));
    if !(h > 0.0) {
        return Err(param(format!("bandwidth must be positive, got {h}")));
    }
    let kernel = Kernel::new(cache, h);
    let response: Vec<f64> = cache.samples.iter().map(|s| -s.weight(v) / s.s_t).collect();
    let vnorm = v.norm();
    let step = 0.1 * h;

    let mut out = DensityEstimate {
        eval_points: eval_points.to_vec(),
        density: Vec::with_capacity(eval_points.len()),
        log_deriv: Vec::with_capacity(eval_points.len()),
        log_deriv_fd: Vec::with_capacity(eval_points.len()),
        flagged: Vec::with_capacity(eval_points.len()),
        bandwidth: h,
    };
    for y in eval_points {
        let (sk, skr) = kernel.sums(y, &response);
        let empty = sk < EMPTY_WINDOW;
        out.density.push(sk * kernel.norm);
        out.flagged.push(empty);
        out.log_deriv.push(if empty { f64::NAN } else { skr / sk });
        let fd = if vnorm == 0.0 {
            0.0
        } else {
            let u = v / vnorm;
            let up = kernel.density(&(y + &u * step));
            let down = kernel.density(&(y - &u * step));
            vnorm * (up.ln() - down.ln()) / (2.0 * step)
        };
        out.log_deriv_fd.push(fd);
    }
    Ok(out)
}

/// `∫ p̂(y)^power dy` in d = 1 by the trapezoid rule on `n_grid` points
/// covering the sample from its 0.05% to 99.95% quantiles plus 6h.
pub fn kde_power_integral(cache: &PathCache, bandwidth: Option<f64>, power: f64, n_grid: usize) -> Result<f64> {
    if cache.dim() != 1 {
        return Err(param("kde_power_integral is one-dimensional"));
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(cache));
    let kernel = Kernel::new(cache, h);
    let lo = quantile(&kernel.first, 0.0005) - 6.0 * h;
    let hi = quantile(&kernel.first, 0.9995) + 6.0 * h;
    let dy = (hi - lo) / (n_grid - 1) as f64;
    let total: f64 = (0..n_grid)
        .map(|i| {
            let y = Vector::from_element(1, lo + i as f64 * dy);
            let w = if i == 0 || i + 1 == n_grid { 0.5 } else { 1.0 };
            w * kernel.density(&y).powf(power)
        })
        .sum();
    Ok(total * dy)
}
