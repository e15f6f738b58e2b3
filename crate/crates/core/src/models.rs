//! Coefficient models: drifts with hand-coded derivatives, diffusion
//! matrices and deterministic perturbation paths.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A drift `b_t(x)` together with its first two derivatives and declared
/// sup bounds on them.
pub trait DriftModel: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, t: f64, x: &Vector) -> Vector;

    /// `∇b_t(x)`, with `∇b_t(x) v = ∇_v b_t(x)`.
    fn jacobian(&self, t: f64, x: &Vector) -> Matrix;

    /// `(∇_u ∇_w b_t)(x)`.
    fn hessian(&self, t: f64, x: &Vector, u: &Vector, w: &Vector) -> Vector;

    /// Declared bound on `‖∇b_t‖`, nondecreasing in `t`.
    fn k1(&self, t: f64) -> f64;

    /// Declared bound on `‖∇²b_t‖`, nondecreasing in `t`.
    fn k2(&self, t: f64) -> f64;

    /// The matrix of `u ↦ (∇_u ∇_w b_t)(x)`.
    fn hessian_matrix(&self, t: f64, x: &Vector, w: &Vector) -> Matrix {
        let d = self.dim();
        let mut g = Matrix::zeros(d, d);
        let mut e = Vector::zeros(d);
        for c in 0..d {
            e[c] = 1.0;
            g.set_column(c, &self.hessian(t, x, &e, w));
            e[c] = 0.0;
        }
        g
    }

    /// True when `∇²b` vanishes identically.
    fn is_affine(&self) -> bool {
        false
    }
}

/// An invertible diffusion coefficient `σ_t`.
pub trait DiffusionSpec: Send + Sync {
    fn dim(&self) -> usize;
    fn sigma(&self, t: f64) -> Matrix;
    fn sigma_inv(&self, t: f64) -> Matrix;
    /// Declared bound on `‖σ_t‖`.
    fn lambda1(&self, t: f64) -> f64;
    /// Declared bound on `‖σ_t^{-1}‖`.
    fn lambda2(&self, t: f64) -> f64;

    fn is_time_constant(&self) -> bool {
        false
    }
}

/// The drift registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Drift {
    Zero { dim: usize },
    /// `b(x) = A x`, `matrix` given row by row.
    Linear { matrix: Vec<Vec<f64>> },
    /// `b_i(x) = -a x_i + b sin(x_i)` coordinatewise.
    DampedSine { dim: usize, a: f64, b: f64 },
}

impl Drift {
    pub fn validate(&self) -> Result<()> {
        match self {
            Drift::Zero { dim } | Drift::DampedSine { dim, .. } if *dim == 0 => {
                Err(param("drift dimension must be positive"))
            }
            Drift::Linear { matrix } => {
                let d = matrix.len();
                if d == 0 || matrix.iter().any(|row| row.len() != d) {
                    return Err(param("linear drift needs a square, nonempty matrix"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn linear_matrix(rows: &[Vec<f64>]) -> Matrix {
        let d = rows.len();
        Matrix::from_fn(d, d, |i, j| rows[i][j])
    }
}

impl DriftModel for Drift {
    fn dim(&self) -> usize {
        match self {
            Drift::Zero { dim } | Drift::DampedSine { dim, .. } => *dim,
            Drift::Linear { matrix } => matrix.len(),
        }
    }

    fn value(&self, _t: f64, x: &Vector) -> Vector {
        match self {
            Drift::Zero { dim } => Vector::zeros(*dim),
            Drift::Linear { matrix } => Drift::linear_matrix(matrix) * x,
            Drift::DampedSine { a, b, .. } => x.map(|xi| -a * xi + b * xi.sin()),
        }
    }

    fn jacobian(&self, _t: f64, x: &Vector) -> Matrix {
        match self {
            Drift::Zero { dim } => Matrix::zeros(*dim, *dim),
            Drift::Linear { matrix } => Drift::linear_matrix(matrix),
            Drift::DampedSine { a, b, .. } => {
                Matrix::from_diagonal(&x.map(|xi| -a + b * xi.cos()))
            }
        }
    }

    fn hessian(&self, _t: f64, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        match self {
            Drift::Zero { dim } => Vector::zeros(*dim),
            Drift::Linear { matrix } => Vector::zeros(matrix.len()),
            Drift::DampedSine { b, .. } => {
                Vector::from_fn(x.len(), |i, _| -b * x[i].sin() * u[i] * w[i])
            }
        }
    }

    fn hessian_matrix(&self, _t: f64, x: &Vector, w: &Vector) -> Matrix {
        let d = x.len();
        match self {
            Drift::DampedSine { b, .. } => {
                Matrix::from_diagonal(&Vector::from_fn(d, |i, _| -b * x[i].sin() * w[i]))
            }
            _ => Matrix::zeros(d, d),
        }
    }

    fn k1(&self, _t: f64) -> f64 {
        match self {
            Drift::Zero { .. } => 0.0,
            Drift::Linear { matrix } => spectral_norm(&Drift::linear_matrix(matrix)),
            Drift::DampedSine { a, b, .. } => a.abs() + b.abs(),
        }
    }

    fn k2(&self, _t: f64) -> f64 {
        match self {
            Drift::Zero { .. } | Drift::Linear { .. } => 0.0,
            Drift::DampedSine { b, .. } => b.abs(),
        }
    }

    fn is_affine(&self) -> bool {
        !matches!(self, Drift::DampedSine { b, .. } if *b != 0.0)
    }
}

/// A time-constant diffusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDiffusion {
    sigma: Matrix,
    sigma_inv: Matrix,
    lambda1: f64,
    lambda2: f64,
}

impl ConstantDiffusion {
    pub fn new(sigma: Matrix) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(param("sigma must be a nonempty square matrix"));
        }
        let sigma_inv = sigma
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("sigma is not invertible".into()))?;
        let lambda1 = spectral_norm(&sigma);
        let lambda2 = spectral_norm(&sigma_inv);
        Ok(Self { sigma, sigma_inv, lambda1, lambda2 })
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        Self::new(Matrix::identity(dim, dim) * scale)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(param("sigma must be square"));
        }
        Self::new(Matrix::from_fn(d, d, |i, j| rows[i][j]))
    }
}

impl DiffusionSpec for ConstantDiffusion {
    fn dim(&self) -> usize {
        self.sigma.nrows()
    }
    fn sigma(&self, _t: f64) -> Matrix {
        self.sigma.clone()
    }
    fn sigma_inv(&self, _t: f64) -> Matrix {
        self.sigma_inv.clone()
    }
    fn lambda1(&self, _t: f64) -> f64 {
        self.lambda1
    }
    fn lambda2(&self, _t: f64) -> f64 {
        self.lambda2
    }
    fn is_time_constant(&self) -> bool {
        true
    }
}

/// Deterministic perturbation path `V` with `V(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeterministicPath {
    #[default]
    Zero,
    /// `V(t) = rate * t`.
    Linear { rate: Vec<f64> },
}

impl DeterministicPath {
    pub fn value(&self, t: f64, dim: usize) -> Vector {
        match self {
            DeterministicPath::Zero => Vector::zeros(dim),
            DeterministicPath::Linear { rate } => Vector::from_column_slice(rate) * t,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            DeterministicPath::Linear { rate } if rate.len() != dim => {
                Err(Error::Dimension { expected: dim, got: rate.len() })
            }
            _ => Ok(()),
        }
    }
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damped_sine_bounds() {
        let drift = Drift::DampedSine { dim: 2, a: 1.0, b: 0.5 };
        assert_eq!(drift.k1(1.0), 1.5);
        assert_eq!(drift.k2(1.0), 0.5);
        assert!(!drift.is_affine());
        assert!(Drift::Linear { matrix: vec![vec![-1.0]] }.is_affine());
    }

    #[test]
    fn linear_drift_norm_is_spectral() {
        let drift = Drift::Linear { matrix: vec![vec![0.0, 2.0], vec![0.0, 0.0]] };
        assert!((drift.k1(0.0) - 2.0).abs() < 1e-12);
        assert!(Drift::Linear { matrix: vec![vec![1.0, 2.0]] }.validate().is_err());
    }

    #[test]
    fn singular_sigma_rejected() {
        let err = ConstantDiffusion::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(err, Err(Error::Singular(_))));
    }

    #[test]
    fn perturbation_starts_at_zero() {
        let v = DeterministicPath::Linear { rate: vec![2.0, -1.0] };
        assert_eq!(v.value(0.0, 2), Vector::zeros(2));
        assert_eq!(v.value(0.5, 2), Vector::from_vec(vec![1.0, -0.5]));
        assert!(v.validate(3).is_err());
    }
}
