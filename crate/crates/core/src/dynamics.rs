//! Euler scheme for `dX = b_t(X) dt + σ_t dW_{S(t)} + dV_t` together with
//! the Jacobian flow `dJ/dt = ∇b_t(X_t) J_t` and its inverse.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::models::{DeterministicPath, DiffusionSpec, DriftModel, Matrix, Vector};
use crate::rng;
use crate::subordinator::{sample_positive_path, BernsteinSpec, SubordinatorPath};

/// One simulated trajectory on the physical-time grid.
///
/// `dw[k]` and `ds[k]` are the increments of `W_{S(·)}` and `S` over step
/// `k`, i.e. between `grid[k]` and `grid[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub grid: Vec<f64>,
    pub x: Vec<Vector>,
    pub j: Vec<Matrix>,
    pub j_inv: Vec<Matrix>,
    pub dw: Vec<Vector>,
    pub ds: Vec<f64>,
    /// `S(t_k)` at every node.
    pub s: Vec<f64>,
    pub x0: Vector,
}

impl PathBundle {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn dt(&self, k: usize) -> f64 {
        self.grid[k + 1] - self.grid[k]
    }

    pub fn terminal(&self) -> &Vector {
        self.x.last().expect("bundle has nodes")
    }

    pub fn s_terminal(&self) -> f64 {
        *self.s.last().expect("bundle has nodes")
    }

    /// `max_k ‖J_k J_k^{-1} - I‖` in operator norm.
    pub fn inverse_residual(&self) -> f64 {
        let d = self.dim();
        let id = Matrix::identity(d, d);
        self.j
            .iter()
            .zip(&self.j_inv)
            .map(|(j, ji)| crate::models::spectral_norm(&(j * ji - &id)))
            .fold(0.0, f64::max)
    }

    /// Writes `t, S, X_1..X_d, J_11, J_21, ..` (J column-major) as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "S".to_string()];
        header.extend((1..=d).map(|i| format!("X_{i}")));
        for c in 1..=d {
            for r in 1..=d {
                header.push(format!("J_{r}{c}"));
            }
        }
        w.write_record(&header)?;
        for k in 0..self.grid.len() {
            let mut row = vec![self.grid[k].to_string(), self.s[k].to_string()];
            row.extend(self.x[k].iter().map(f64::to_string));
            row.extend(self.j[k].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates one trajectory driven by the given subordinator path.
///
/// Standard normals are drawn for every step, including steps with zero
/// subordinator increment, so two paths on the same grid fed by the same
/// stream share their Gaussian innovations step by step.
pub fn simulate<R: Rng + ?Sized>(
    x0: &Vector,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    sub: &SubordinatorPath,
    v_path: &DeterministicPath,
    rng: &mut R,
) -> Result<PathBundle> {
    let d = x0.len();
    let n = sub.n_steps();
    let ds = sub.increments();
    let noise: Vec<Vector> =
        (0..n).map(|_| Vector::from_fn(d, |_, _| rng.sample(StandardNormal))).collect();
    let dw = noise.into_iter().zip(&ds).map(|(z, &s)| z * s.sqrt()).collect();
    integrate(x0, drift, diff, sub, v_path, ds, dw)
}

/// Runs the Euler scheme with prescribed Brownian increments.
pub fn integrate(
    x0: &Vector,
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    sub: &SubordinatorPath,
    v_path: &DeterministicPath,
    ds: Vec<f64>,
    dw: Vec<Vector>,
) -> Result<PathBundle> {
    let d = x0.len();
    check_dims(d, drift, diff)?;
    v_path.validate(d)?;
    let n = sub.n_steps();
    if ds.len() != n || dw.len() != n {
        return Err(Error::Dimension { expected: n, got: ds.len().min(dw.len()) });
    }
    let grid = sub.grid().to_vec();
    let id = Matrix::identity(d, d);

    let mut x = Vec::with_capacity(n + 1);
    let mut j = Vec::with_capacity(n + 1);
    let mut j_inv = Vec::with_capacity(n + 1);
    x.push(x0.clone());
    j.push(id.clone());
    j_inv.push(id.clone());

    let constant_sigma = diff.is_time_constant().then(|| diff.sigma(grid[0]));
    let perturbed = !matches!(v_path, DeterministicPath::Zero);
    let mut v_prev = v_path.value(grid[0], d);
    let mut step = Matrix::zeros(d, d);
    for k in 0..n {
        let t = grid[k];
        let dt = grid[k + 1] - t;
        let xk = &x[k];

        let mut x_next = drift.value(t, xk);
        x_next *= dt;
        x_next += xk;
        match &constant_sigma {
            Some(sigma) => x_next.gemv(1.0, sigma, &dw[k], 1.0),
            None => x_next.gemv(1.0, &diff.sigma(t), &dw[k], 1.0),
        }
        if perturbed {
            let v_next = v_path.value(grid[k + 1], d);
            x_next += &v_next - &v_prev;
            v_prev = v_next;
        }

        // One Euler step of the flow is J_{k+1} = (I + dt ∇b) J_k; the inverse
        // is propagated through the exact inverse of that step matrix.
        step.copy_from(&drift.jacobian(t, xk));
        step *= dt;
        for i in 0..d {
            step[(i, i)] += 1.0;
        }
        let step_inv = step
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("Jacobian step at step {k}")))?;
        let mut j_next = Matrix::zeros(d, d);
        j_next.gemm(1.0, &step, &j[k], 0.0);
        let mut j_inv_next = Matrix::zeros(d, d);
        j_inv_next.gemm(1.0, &j_inv[k], &step_inv, 0.0);

        if x_next.iter().chain(j_next.iter()).chain(j_inv_next.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Simulation { step: k });
        }
        x.push(x_next);
        j.push(j_next);
        j_inv.push(j_inv_next);
    }

    Ok(PathBundle { grid, x, j, j_inv, dw, s: sub.values().to_vec(), ds, x0: x0.clone() })
}

fn check_dims(d: usize, drift: &dyn DriftModel, diff: &dyn DiffusionSpec) -> Result<()> {
    if drift.dim() != d {
        return Err(Error::Dimension { expected: d, got: drift.dim() });
    }
    if diff.dim() != d {
        return Err(Error::Dimension { expected: d, got: diff.dim() });
    }
    Ok(())
}

/// Strong discrepancy between a coarse and a refined Euler solution driven
/// by the same noise, averaged over `n_paths`: the mean of the max-norm
/// distance at the shared nodes.
///
/// For deterministic time each coarse Gaussian increment is split into
/// `factor` pieces by Brownian-bridge sampling. For stable time the jumps
/// stay on the coarse nodes and only the physical grid is refined.
#[allow(clippy::too_many_arguments)]
pub fn grid_refinement_error(
    drift: &dyn DriftModel,
    diff: &dyn DiffusionSpec,
    spec: BernsteinSpec,
    x0: &Vector,
    horizon: f64,
    n_coarse: usize,
    factor: usize,
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    if factor < 2 || n_paths == 0 {
        return Err(param("grid refinement needs factor >= 2 and n_paths >= 1"));
    }
    let d = x0.len();
    let n_fine = n_coarse * factor;
    let zero = DeterministicPath::Zero;
    let mut total = 0.0;
    for p in 0..n_paths {
        let mut rng = rng::stream(seed, p as u64);
        let (coarse_sub, _) = sample_positive_path(spec, horizon, n_coarse, &mut rng)?;
        let coarse_ds = coarse_sub.increments();
        let coarse_dw: Vec<Vector> = coarse_ds
            .iter()
            .map(|&s| Vector::from_fn(d, |_, _| s.sqrt() * rng.sample::<f64, _>(StandardNormal)))
            .collect();

        let (fine_sub, fine_ds, fine_dw) = match spec {
            BernsteinSpec::DeterministicTime => {
                let sub = SubordinatorPath::deterministic(horizon, n_fine)?;
                let ds = sub.increments();
                let mut dw = Vec::with_capacity(n_fine);
                for (k, total_dw) in coarse_dw.iter().enumerate() {
                    let piece_var: Vec<f64> = ds[k * factor..(k + 1) * factor].to_vec();
                    dw.extend(bridge_split(total_dw, &piece_var, &mut rng));
                }
                (sub, ds, dw)
            }
            BernsteinSpec::Stable { .. } => {
                let fine_grid = SubordinatorPath::deterministic(horizon, n_fine)?.grid().to_vec();
                let jumps = coarse_sub.jumps().iter().map(|j| (j.time, j.size)).collect();
                let sub = SubordinatorPath::from_jumps(fine_grid, jumps)?;
                let mut ds = vec![0.0; n_fine];
                let mut dw = vec![Vector::zeros(d); n_fine];
                for k in 0..n_coarse {
                    ds[(k + 1) * factor - 1] = coarse_ds[k];
                    dw[(k + 1) * factor - 1] = coarse_dw[k].clone();
                }
                (sub, ds, dw)
            }
        };

        let coarse = integrate(x0, drift, diff, &coarse_sub, &zero, coarse_ds, coarse_dw)?;
        let fine = integrate(x0, drift, diff, &fine_sub, &zero, fine_ds, fine_dw)?;
        let err = (0..=n_coarse)
            .map(|k| (&coarse.x[k] - &fine.x[k * factor]).amax())
            .fold(0.0, f64::max);
        total += err;
    }
    Ok(total / n_paths as f64)
}

/// Splits a Gaussian increment with total variance `sum(var)` into pieces
/// with the given variances, conditionally on their sum.
fn bridge_split<R: Rng + ?Sized>(total: &Vector, var: &[f64], rng: &mut R) -> Vec<Vector> {
    let mut remaining = total.clone();
    let mut remaining_var: f64 = var.iter().sum();
    let mut out = Vec::with_capacity(var.len());
    for (i, &v) in var.iter().enumerate() {
        if i + 1 == var.len() {
            out.push(remaining.clone());
            break;
        }
        let w = v / remaining_var;
        let sd = (v * (remaining_var - v) / remaining_var).max(0.0).sqrt();
        let piece = remaining.map(|r| w * r + sd * rng.sample::<f64, _>(StandardNormal));
        remaining -= &piece;
        remaining_var -= v;
        out.push(piece);
    }
    out
}

/// Worst relative errors found by [`check_drift`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCheck {
    pub jacobian_error: f64,
    pub hessian_error: f64,
    pub max_jacobian_norm: f64,
    pub max_hessian_norm: f64,
}

impl DriftCheck {
    /// Derivatives agree with finite differences to `tol` and the declared
    /// bounds hold at every probe.
    pub fn passes(&self, tol: f64, k1: f64, k2: f64) -> bool {
        self.jacobian_error <= tol
            && self.hessian_error <= tol
            && self.max_jacobian_norm <= k1 * (1.0 + 1e-12)
            && self.max_hessian_norm <= k2 * (1.0 + 1e-12)
    }
}

/// Probes hand-coded derivatives against central finite differences with
/// step `h` at random `(t, x)`, and records the largest derivative norms.
pub fn check_drift<R: Rng + ?Sized>(
    drift: &dyn DriftModel,
    horizon: f64,
    probes: usize,
    h: f64,
    rng: &mut R,
) -> DriftCheck {
    let d = drift.dim();
    let mut out = DriftCheck {
        jacobian_error: 0.0,
        hessian_error: 0.0,
        max_jacobian_norm: 0.0,
        max_hessian_norm: 0.0,
    };
    for _ in 0..probes {
        let t = horizon * rng.random::<f64>();
        let x = Vector::from_fn(d, |_, _| 4.0 * rng.random::<f64>() - 2.0);
        let jac = drift.jacobian(t, &x);
        for c in 0..d {
            let mut e = Vector::zeros(d);
            e[c] = h;
            let fd = (drift.value(t, &(&x + &e)) - drift.value(t, &(&x - &e))) / (2.0 * h);
            for r in 0..d {
                let err = (fd[r] - jac[(r, c)]).abs() / jac[(r, c)].abs().max(1.0);
                out.jacobian_error = out.jacobian_error.max(err);
            }
            // ∇_{e_c} ∇_{e_m} b is the c-derivative of column m of ∇b.
            let fd_jac =
                (drift.jacobian(t, &(&x + &e)) - drift.jacobian(t, &(&x - &e))) / (2.0 * h);
            for m in 0..d {
                let mut um = Vector::zeros(d);
                um[m] = 1.0;
                let mut uc = Vector::zeros(d);
                uc[c] = 1.0;
                let hess = drift.hessian(t, &x, &uc, &um);
                for r in 0..d {
                    let err = (fd_jac[(r, m)] - hess[r]).abs() / hess[r].abs().max(1.0);
                    out.hessian_error = out.hessian_error.max(err);
                }
            }
        }
        out.max_jacobian_norm = out.max_jacobian_norm.max(crate::models::spectral_norm(&jac));
        // Operator norm of the bilinear map, probed over random unit pairs.
        for _ in 0..8 {
            let u = random_unit(d, rng);
            let w = random_unit(d, rng);
            out.max_hessian_norm = out.max_hessian_norm.max(drift.hessian(t, &x, &u, &w).norm());
        }
    }
    out
}

/// `max ‖σ σ^{-1} - I‖`, `max ‖σ‖` and `max ‖σ^{-1}‖` over the probe times.
pub fn check_diffusion(diff: &dyn DiffusionSpec, times: &[f64]) -> (f64, f64, f64) {
    let d = diff.dim();
    let id = Matrix::identity(d, d);
    times.iter().fold((0.0, 0.0, 0.0), |(res, n1, n2), &t| {
        let s = diff.sigma(t);
        let si = diff.sigma_inv(t);
        (
            f64::max(res, crate::models::spectral_norm(&(&s * &si - &id))),
            f64::max(n1, crate::models::spectral_norm(&s)),
            f64::max(n2, crate::models::spectral_norm(&si)),
        )
    })
}

fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    let v = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        random_unit(d, rng)
    }
}
