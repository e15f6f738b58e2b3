use std::fmt;
use std::str::FromStr;

use crate::error::{param, Error};
use crate::models::Vector;

/// Building blocks for test functions. `Sin`, `Logistic` and `Linear` act
/// on `<a, x>`; `Gauss` is `exp(-|x|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Sin,
    Gauss,
    Logistic,
    Linear,
    /// The constant 1.
    One,
}

/// `offset + scale * base(x)` with a hand-coded gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub offset: f64,
    pub scale: f64,
    pub base: Base,
    /// Direction `a`; `None` means `e_1`.
    pub direction: Option<Vec<f64>>,
}

impl TestFunction {
    pub fn new(offset: f64, scale: f64, base: Base) -> Self {
        Self { offset, scale, base, direction: None }
    }

    pub fn sin() -> Self {
        Self::new(0.0, 1.0, Base::Sin)
    }

    pub fn gauss() -> Self {
        Self::new(0.0, 1.0, Base::Gauss)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0.0, Base::One)
    }

    pub fn linear(a: Vec<f64>) -> Self {
        Self { direction: Some(a), ..Self::new(0.0, 1.0, Base::Linear) }
    }

    fn projection(&self, x: &Vector) -> f64 {
        match &self.direction {
            Some(a) => a.iter().zip(x.iter()).map(|(a, x)| a * x).sum(),
            None => x[0],
        }
    }

    fn direction_vector(&self, d: usize) -> Vector {
        match &self.direction {
            Some(a) => Vector::from_column_slice(a),
            None => {
                let mut e = Vector::zeros(d);
                e[0] = 1.0;
                e
            }
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let base = match self.base {
            Base::Sin => self.projection(x).sin(),
            Base::Gauss => (-x.norm_squared()).exp(),
            Base::Logistic => 1.0 / (1.0 + (-self.projection(x)).exp()),
            Base::Linear => self.projection(x),
            Base::One => 1.0,
        };
        self.offset + self.scale * base
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        let d = x.len();
        let g = match self.base {
            Base::Sin => self.direction_vector(d) * self.projection(x).cos(),
            Base::Gauss => x * (-2.0 * (-x.norm_squared()).exp()),
            Base::Logistic => {
                let s = 1.0 / (1.0 + (-self.projection(x)).exp());
                self.direction_vector(d) * (s * (1.0 - s))
            }
            Base::Linear => self.direction_vector(d),
            Base::One => Vector::zeros(d),
        };
        g * self.scale
    }

    fn base_range(&self) -> (f64, f64) {
        match self.base {
            Base::Sin => (-1.0, 1.0),
            Base::Gauss | Base::Logistic => (0.0, 1.0),
            Base::Linear => (f64::NEG_INFINITY, f64::INFINITY),
            Base::One => (1.0, 1.0),
        }
    }

    /// `‖f‖_∞` (exact for the registry functions).
    pub fn sup_norm(&self) -> f64 {
        if self.scale == 0.0 {
            return self.offset.abs();
        }
        let (lo, hi) = self.base_range();
        let a = self.offset + self.scale * lo;
        let b = self.offset + self.scale * hi;
        a.abs().max(b.abs())
    }

    /// Infimum of `f`.
    pub fn lower_bound(&self) -> f64 {
        if self.scale == 0.0 {
            return self.offset;
        }
        let (lo, hi) = self.base_range();
        (self.offset + self.scale * lo).min(self.offset + self.scale * hi)
    }

    /// Strictly positive, which entropy and Harnack uses require. Gauss and
    /// logistic bases only approach 0, so `c + s*gauss` with `c = 0, s > 0`
    /// counts as positive.
    pub fn is_positive(&self) -> bool {
        let lb = self.lower_bound();
        lb > 0.0 || (lb == 0.0 && matches!(self.base, Base::Gauss | Base::Logistic) && self.scale > 0.0)
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            Base::Sin => "sin",
            Base::Gauss => "gauss",
            Base::Logistic => "logistic",
            Base::Linear => "linear",
            Base::One => return write!(f, "const:{}", self.offset),
        };
        if self.offset != 0.0 {
            write!(f, "{}+", self.offset)?;
        }
        if self.scale != 1.0 {
            write!(f, "{}", self.scale)?;
        }
        write!(f, "{base}")?;
        if let Some(a) = &self.direction {
            let parts: Vec<String> = a.iter().map(f64::to_string).collect();
            write!(f, "@{}", parts.join(";"))?;
        }
        Ok(())
    }
}

/// Parses `sin`, `gauss`, `logistic`, `linear`, `const:c`, optionally with
/// an offset and scale as in `2+sin` or `1+0.5gauss`, and an optional
/// direction suffix `@a1;a2`.
impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(c) = s.strip_prefix("const:") {
            let c = c.parse().map_err(|_| param(format!("bad constant in {s:?}")))?;
            return Ok(Self::constant(c));
        }
        let (body, direction) = match s.split_once('@') {
            Some((b, dir)) => {
                let a = dir
                    .split(';')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| param(format!("bad direction in {s:?}")))?;
                (b, Some(a))
            }
            None => (s, None),
        };
        let (offset, rest) = match body.split_once('+') {
            Some((o, r)) => {
                (o.trim().parse::<f64>().map_err(|_| param(format!("bad offset in {s:?}")))?, r)
            }
            None => (0.0, body),
        };
        let split = rest
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| param(format!("missing function name in {s:?}")))?;
        let (scale, name) = rest.split_at(split);
        let scale = if scale.trim().is_empty() {
            1.0
        } else {
            scale.trim().parse().map_err(|_| param(format!("bad scale in {s:?}")))?
        };
        let base = match name.trim() {
            "sin" => Base::Sin,
            "gauss" => Base::Gauss,
            "logistic" => Base::Logistic,
            "linear" => Base::Linear,
            other => return Err(param(format!("unknown test function {other:?}"))),
        };
        Ok(Self { offset, scale, base, direction })
    }
}
