//! Standardized parent families, described through their quantile functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Number of probe points used to check a custom quantile for monotonicity.
pub const MONOTONE_PROBE_POINTS: usize = 1024;

pub const DEFAULT_QUAD_POINTS: usize = 64;
pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

pub type QuantileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied quantile function `u ↦ F⁻¹(u)` of a standardized parent.
#[derive(Clone)]
pub struct CustomQuantile {
    pub name: String,
    pub quantile: QuantileFn,
}

impl fmt::Debug for CustomQuantile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomQuantile")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    StandardNormal,
    StandardExponential,
    StandardUniform,
    Custom(CustomQuantile),
}

impl Family {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Family::Custom(CustomQuantile {
            name: name.into(),
            quantile: Arc::new(f),
        })
    }

    /// Parses the built-in family names (`normal`, `exponential`, `uniform`,
    /// with or without the `standard-` prefix).
    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "normal" | "standard-normal" | "gaussian" => Some(Family::StandardNormal),
            "exponential" | "standard-exponential" | "exp" => Some(Family::StandardExponential),
            "uniform" | "standard-uniform" => Some(Family::StandardUniform),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::StandardNormal => "standard-normal".into(),
            Family::StandardExponential => "standard-exponential".into(),
            Family::StandardUniform => "standard-uniform".into(),
            Family::Custom(c) => format!("custom-quantile:{}", c.name),
        }
    }

    /// Quantile at `u`, given both `u` and `1 - u` so that upper-tail values
    /// do not lose precision to cancellation.
    #[inline]
    pub fn quantile_pair(&self, u: f64, uc: f64) -> f64 {
        match self {
            Family::StandardNormal => {
                if u <= 0.5 {
                    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
                } else {
                    std::f64::consts::SQRT_2 * erfc_inv(2.0 * uc)
                }
            }
            Family::StandardExponential => -uc.ln(),
            Family::StandardUniform => u,
            Family::Custom(c) => (c.quantile)(u),
        }
    }

    #[inline]
    pub fn quantile(&self, u: f64) -> f64 {
        self.quantile_pair(u, 1.0 - u)
    }

    /// Mean of the standardized parent, where known in closed form.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Family::StandardNormal => Some(0.0),
            Family::StandardExponential => Some(1.0),
            Family::StandardUniform => Some(0.5),
            Family::Custom(_) => None,
        }
    }

    fn check_monotone(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..MONOTONE_PROBE_POINTS {
            let u = (k as f64 + 0.5) / MONOTONE_PROBE_POINTS as f64;
            let q = self.quantile(u);
            if !q.is_finite() {
                return Err(Error::domain(format!(
                    "quantile function is not finite at u = {u}"
                )));
            }
            if q < prev {
                return Err(Error::domain(format!(
                    "quantile function is not monotone: Q({u}) = {q} < {prev}"
                )));
            }
            prev = q;
        }
        Ok(())
    }
}

/// A standardized family together with the quadrature controls used to
/// build its moment table.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    pub family: Family,
    /// Starting Gauss–Legendre node count per dimension.
    pub quad_points: usize,
    /// Target absolute accuracy of every mean and covariance.
    pub quad_tol: f64,
}

impl DistributionSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            quad_points: DEFAULT_QUAD_POINTS,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    pub fn with_tol(mut self, quad_tol: f64) -> Self {
        self.quad_tol = quad_tol;
        self
    }

    pub fn with_points(mut self, quad_points: usize) -> Self {
        self.quad_points = quad_points;
        self
    }

    pub fn normal() -> Self {
        Self::new(Family::StandardNormal)
    }

    pub fn exponential() -> Self {
        Self::new(Family::StandardExponential)
    }

    pub fn uniform() -> Self {
        Self::new(Family::StandardUniform)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quad_tol > 0.0) || !self.quad_tol.is_finite() {
            return Err(Error::domain(format!(
                "quad_tol must be positive, got {}",
                self.quad_tol
            )));
        }
        if self.quad_points < 16 {
            return Err(Error::domain(format!(
                "quad_points must be at least 16, got {}",
                self.quad_points
            )));
        }
        if let Family::Custom(_) = self.family {
            self.family.check_monotone()?;
        }
        Ok(())
    }
}

/// Piecewise-linear quantile function through tabulated knots `(u, q)`.
/// Outside the first and last knot the end values are held constant.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TabulatedQuantile {
    pub name: String,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
}

impl TabulatedQuantile {
    pub fn validate(&self) -> Result<()> {
        if self.u.len() < 2 || self.u.len() != self.q.len() {
            return Err(Error::domain(
                "tabulated quantile needs at least two knots and matching u/q lengths",
            ));
        }
        if self.u.iter().any(|&u| !(0.0..=1.0).contains(&u)) {
            return Err(Error::domain("tabulated quantile knots must lie in [0, 1]"));
        }
        if self.u.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(
                "tabulated quantile knots must be strictly increasing",
            ));
        }
        if self.q.iter().any(|q| !q.is_finite()) {
            return Err(Error::domain("tabulated quantile values must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.u.len();
        if x <= self.u[0] {
            return self.q[0];
        }
        if x >= self.u[n - 1] {
            return self.q[n - 1];
        }
        let k = self.u.partition_point(|&u| u <= x) - 1;
        let t = (x - self.u[k]) / (self.u[k + 1] - self.u[k]);
        self.q[k] + t * (self.q[k + 1] - self.q[k])
    }

    pub fn into_family(self) -> Result<Family> {
        self.validate()?;
        let name = self.name.clone();
        Ok(Family::custom(name, move |u| self.eval(u)))
    }
}
