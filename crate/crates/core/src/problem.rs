use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// The tuple `(N, theta, gamma, p, T)` under the standing assumptions
/// `0 < gamma < min(theta, N)`, `p > 1`, `T > 0` and, for `theta < 2`,
/// `gamma < theta (p - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub dim: usize,
    pub theta: f64,
    pub gamma: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl Problem {
    pub fn new(dim: usize, theta: f64, gamma: f64, p: f64, horizon: f64) -> Result<Self> {
        let pr = Self {
            dim,
            theta,
            gamma,
            p,
            horizon,
        };
        pr.validate()?;
        Ok(pr)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        let n = self.dim as f64;
        if !(self.gamma > 0.0 && self.gamma < self.theta.min(n)) {
            return Err(Error::Invalid(format!(
                "standing assumption 0 < gamma < min(theta, N) violated: gamma = {}, theta = {}, N = {}",
                self.gamma, self.theta, self.dim
            )));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::Invalid(format!("p = {} must exceed 1", self.p)));
        }
        if self.theta < 2.0 && !(self.gamma < self.theta * (self.p - 1.0)) {
            return Err(Error::Invalid(format!(
                "gamma < theta (p - 1) is required for theta < 2: gamma = {}, theta (p - 1) = {}",
                self.gamma,
                self.theta * (self.p - 1.0)
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Invalid(format!(
                "horizon T = {} must be positive",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.dim, self.theta)
    }

    /// `T^{1/theta}`, the parabolic length scale of the horizon.
    pub fn length_scale(&self) -> f64 {
        self.horizon.powf(1.0 / self.theta)
    }

    /// Fujita exponent `p_0 = 1 + theta/N`.
    pub fn p0(&self) -> f64 {
        1.0 + self.theta / self.dim as f64
    }

    /// Hardy-shifted exponent `p_gamma = 1 + (theta - gamma)/N`.
    pub fn p_gamma(&self) -> f64 {
        1.0 + (self.theta - self.gamma) / self.dim as f64
    }
}
