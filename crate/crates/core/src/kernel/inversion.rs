//! Fourier inversion of the multiplier `exp(-|xi|^theta)`.
//!
//! In one dimension `G(x,1) = (1/pi) Re int_0^inf exp(i k x - k^theta) dk`.
//! The integration path is rotated onto the ray `k = s e^{i phi}` with
//! `0 < phi < min(pi/2, pi/(2 theta))`; along it the oscillation is damped
//! by `exp(-s x sin phi)` and the multiplier stays bounded, so the tail of
//! the density is resolved to full relative precision instead of being the
//! small difference of O(1) oscillating panels.
//!
//! Two dimensions use the Hankel transform in its projected form: the
//! one-dimensional marginal of the radial density is the one-dimensional
//! kernel, and the inverse Abel transform gives
//! `G_2(r) = -(1/pi) int_0^inf G_1'(r cosh u) du`, with `G_1' <= 0`.
//! `G_1'` is tabulated once per order together with `G_1''` (cubic Hermite
//! between nodes) and replaced by its asymptotic series far out.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Result;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::quadrature::{tanh_sinh, Adaptive};

/// Per-panel relative tolerance of the oscillatory quadrature.
pub const PANEL_TOL: f64 = 1e-8;
/// Maximal bisection depth per panel.
pub const MAX_REFINEMENTS: u32 = 20;

/// Decay exponent beyond which the ray integrand is dropped.
const CUTOFF: f64 = 46.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct RayInversion {
    theta: f64,
    sin_phi: f64,
    cos_theta_phi: f64,
    omega: Complex64,
    omega_theta: Complex64,
}

impl RayInversion {
    pub(crate) fn new(theta: f64) -> Self {
        let phi = 0.5 * (PI / 2.0).min(PI / (2.0 * theta));
        Self {
            theta,
            sin_phi: phi.sin(),
            cos_theta_phi: (theta * phi).cos(),
            omega: Complex64::from_polar(1.0, phi),
            omega_theta: Complex64::from_polar(1.0, theta * phi),
        }
    }

    fn phase(&self, s: f64, x: f64) -> Complex64 {
        let i_omega_x = Complex64::new(0.0, 1.0) * self.omega * (s * x);
        (i_omega_x - self.omega_theta * s.powf(self.theta)).exp()
    }

    /// Generic ray integral of `Re/Im[weight * s^m * phase(s)]`.
    fn ray<F: Fn(Complex64) -> f64>(&self, x: f64, m: i32, project: F) -> Result<f64> {
        let decay = |s: f64| s * x * self.sin_phi + s.powf(self.theta) * self.cos_theta_phi;
        let scale_x = if x > 0.0 {
            1.0 / (x * self.sin_phi)
        } else {
            f64::INFINITY
        };
        let scale_m = self.cos_theta_phi.powf(-1.0 / self.theta);
        let sigma = scale_x.min(scale_m);
        let integrand = |s: f64| -> f64 {
            let w = if m == 0 { 1.0 } else { s.powi(m) };
            project(self.phase(s, x)) * w
        };
        let head = tanh_sinh(|s, _, _| integrand(s), 0.0, sigma, 1e-11)?;
        let mut total = head.value;
        let quad = Adaptive {
            rel_tol: PANEL_TOL,
            abs_tol: 1e-16 * sigma.powi(m + 1),
            max_depth: MAX_REFINEMENTS,
        };
        let mut lo = sigma;
        loop {
            let s_m = if m == 0 { 0.0 } else { (m as f64) * lo.ln() };
            if decay(lo) - s_m > CUTOFF {
                break;
            }
            let hi = 2.0 * lo;
            total += quad.integrate(integrand, lo, hi)?.value;
            lo = hi;
        }
        Ok(total)
    }

    /// `G(x, 1)` in one dimension.
    pub(crate) fn density_1d(&self, x: f64) -> Result<f64> {
        let omega = self.omega;
        let v = self.ray(x.abs(), 0, |z| (omega * z).re)?;
        Ok(v / PI)
    }

    /// `d/dx G(x, 1)` in one dimension, for `x >= 0`.
    pub(crate) fn derivative_1d(&self, x: f64) -> Result<f64> {
        let omega2 = self.omega * self.omega;
        let v = self.ray(x, 1, |z| (omega2 * z).im)?;
        Ok(-v / PI)
    }

    /// `d^2/dx^2 G(x, 1)` in one dimension, for `x >= 0`.
    pub(crate) fn second_derivative_1d(&self, x: f64) -> Result<f64> {
        let omega3 = self.omega * self.omega * self.omega;
        let v = self.ray(x, 2, |z| (omega3 * z).re)?;
        Ok(-v / PI)
    }
}

/// Large-`x` expansion of the one-dimensional density,
/// `G(x,1) ~ (1/pi) sum_k (-1)^{k+1} Gamma(k theta + 1)/k! sin(k pi theta/2) x^{-k theta - 1}`;
/// returns `-G'(x)`.
fn asymptotic_neg_derivative(theta: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut log_fact = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        log_fact += kf.ln();
        let e = kf * theta + 1.0;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let mag = (ln_gamma(e) - log_fact - (e + 1.0) * x.ln()).exp();
        let term = sign * (kf * PI * theta / 2.0).sin() * e * mag;
        sum += term;
        if mag * e < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / PI
}

/// `-G_1'` and `-G_1''` tabulated once per order for the Abel transform.
pub(crate) struct AbelTable {
    theta: f64,
    xs: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    x_far: f64,
}

impl AbelTable {
    /// Switch-over point to the asymptotic expansion.
    const X_FAR: f64 = 1e4;

    pub(crate) fn new(inv: &RayInversion) -> Result<Self> {
        let mut xs: Vec<f64> = (0..1024).map(|i| i as f64 / 1024.0).collect();
        let q: f64 = 1.002;
        let mut x = 1.0;
        while x < Self::X_FAR {
            xs.push(x);
            x *= q;
        }
        xs.push(Self::X_FAR);
        let pairs = xs
            .par_iter()
            .map(|&x| Ok((-inv.derivative_1d(x)?, -inv.second_derivative_1d(x)?)))
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (g, dg) = pairs.into_iter().unzip();
        Ok(Self {
            theta: inv.theta,
            xs,
            g,
            dg,
            x_far: Self::X_FAR,
        })
    }

    /// `-G_1'(x)` for `x >= 0`.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        if x >= self.x_far {
            return asymptotic_neg_derivative(self.theta, x);
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.g[i]
            + (s3 - 2.0 * s2 + s) * h * self.dg[i]
            + (-2.0 * s3 + 3.0 * s2) * self.g[i + 1]
            + (s3 - s2) * h * self.dg[i + 1]
    }

    /// `G(r, 1)` in two dimensions, `r > 0`.
    pub(crate) fn density_2d(&self, r: f64) -> Result<f64> {
        let f = |u: f64| self.eval(r * u.cosh());
        let peak = (2.0 / r).ln().max(0.0);
        let mut quad = Adaptive {
            rel_tol: 1e-11,
            abs_tol: 0.0,
            max_depth: MAX_REFINEMENTS,
        };
        let mut total = 0.0;
        let mut lo = 0.0;
        loop {
            let hi = lo + 1.0;
            let part = quad.integrate(f, lo, hi)?.value;
            total += part;
            quad.abs_tol = 1e-16 * total;
            lo = hi;
            if lo > peak + 1.0 && part <= 1e-14 * total {
                break;
            }
        }
        Ok(total / PI)
    }
}
