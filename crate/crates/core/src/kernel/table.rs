//! Tabulated unit-time profile and everything derived from it.

use rayon::prelude::*;

use super::inversion::{AbelTable, RayInversion};
use super::{eval_closed_form, KernelSpec};
use crate::error::{Error, Result};
use crate::format::fixed_sig;
use std::sync::LazyLock;

use crate::quadrature::{gauss_legendre, tanh_sinh, Adaptive};

pub const DEFAULT_POINTS: usize = 4096;

static GL8: LazyLock<(Vec<f64>, Vec<f64>)> = LazyLock::new(|| gauss_legendre(8));

/// Radial profile `G(r, 1)` on a grid, with a monotone cubic interpolant in
/// `ln G` and the algebraic tail `c (1 + r)^{-N-theta}` beyond the last node.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub spec: KernelSpec,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_exponent: f64,
    pub tail_constant: f64,
    log_values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Empirical constants of `m_low (1+r)^{-N-theta} <= G(r,1) <= m_high (1+r)^{-N-theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSidedBand {
    pub m_low: f64,
    pub m_high: f64,
}

/// Uniform core of spacing `2^k` (so that integer radii are nodes) followed
/// by a geometric stretch out to `r_max`.
pub(crate) fn radial_grid(r_max: f64, n_points: usize) -> Vec<f64> {
    let n_core = n_points / 2;
    let target = r_max.min(10.0);
    let h0 = 2f64.powf((target / n_core as f64).log2().floor());
    let r_core = h0 * n_core as f64;
    if r_core >= r_max {
        let h = r_max / (n_points - 1) as f64;
        return (0..n_points).map(|i| i as f64 * h).collect();
    }
    let mut radii: Vec<f64> = (0..=n_core).map(|i| i as f64 * h0).collect();
    let m = n_points - n_core - 1;
    let q = (r_max / r_core).ln() / m as f64;
    for j in 1..m {
        radii.push(r_core * (q * j as f64).exp());
    }
    radii.push(r_max);
    radii
}

/// Unit-time profile at radius `r`.
fn unit_profile(
    spec: &KernelSpec,
    inv: &RayInversion,
    abel: Option<&AbelTable>,
    r: f64,
) -> Result<f64> {
    if spec.theta == 2.0 {
        let mut x = vec![0.0; spec.dim];
        x[0] = r;
        return eval_closed_form(spec, &x, 1.0);
    }
    if r == 0.0 {
        return Ok(spec.value_at_origin());
    }
    match spec.dim {
        1 => inv.density_1d(r),
        2 => match abel {
            Some(a) => a.density_2d(r),
            None => Err(Error::Invalid(
                "planar synthesis needs the Abel table".into(),
            )),
        },
        d => Err(Error::Invalid(format!(
            "kernel synthesis supports N in {{1, 2}}, got {d}"
        ))),
    }
}

/// Tabulate `G(r, 1)` on `n_points` radii in `[0, r_max]`.
pub fn synthesize_kernel(spec: &KernelSpec, r_max: f64, n_points: usize) -> Result<KernelTable> {
    spec.validate()?;
    if !(r_max > 1.0) || !r_max.is_finite() {
        return Err(Error::Invalid(format!("r_max = {r_max} must exceed 1")));
    }
    if n_points < 16 {
        return Err(Error::Invalid(format!("n_points = {n_points} below 16")));
    }
    if spec.theta < 2.0 && spec.dim > 2 {
        return Err(Error::Invalid(format!(
            "kernel synthesis supports N in {{1, 2}}, got {}",
            spec.dim
        )));
    }
    let radii = radial_grid(r_max, n_points);
    let inv = RayInversion::new(spec.theta);
    let abel = if spec.dim == 2 && spec.theta < 2.0 {
        Some(AbelTable::new(&inv)?)
    } else {
        None
    };
    let values = radii
        .par_iter()
        .map(|&r| unit_profile(spec, &inv, abel.as_ref(), r))
        .collect::<Result<Vec<f64>>>()?;
    KernelTable::from_values(*spec, radii, values)
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (d0, d1) = (delta[i - 1], delta[i]);
        if d0 * d1 > 0.0 {
            // three-point derivative, limited so the cubic stays monotone
            let c = (h[i] * d0 + h[i - 1] * d1) / (h[i - 1] + h[i]);
            let cap = 3.0 * d0.abs().min(d1.abs());
            d[i] = c.signum() * c.abs().min(cap);
        }
    }
    // the profile is even, so its log has zero slope at the origin
    d[0] = if x[0] == 0.0 { 0.0 } else { delta[0] };
    let e = ((2.0 * h[n - 2] + h[n - 3]) * delta[n - 2] - h[n - 2] * delta[n - 3])
        / (h[n - 2] + h[n - 3]);
    d[n - 1] = if e * delta[n - 2] <= 0.0 {
        0.0
    } else {
        e.signum() * e.abs().min(3.0 * delta[n - 2].abs())
    };
    d
}

/// `int_R^inf r^{N-1+a} (1+r)^{-N-theta} dr` via the substitution
/// `u = 1/(1+r)` and a binomial series, for `R >= 1` and `a < theta`.
fn tail_integral(dim: usize, theta: f64, a: f64, big_r: f64) -> f64 {
    let u0 = 1.0 / (1.0 + big_r);
    let beta = dim as f64 - 1.0 + a;
    let e0 = theta - a;
    let mut coef = 1.0;
    let mut upow = u0.powf(e0);
    let mut sum = 0.0;
    for k in 0..400 {
        let term = coef * upow / (e0 + k as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        coef *= -(beta - k as f64) / (k as f64 + 1.0);
        upow *= u0;
        if coef == 0.0 {
            break;
        }
    }
    sum
}

impl KernelTable {
    /// Build a table from tabulated values; checks the table invariants.
    pub fn from_values(spec: KernelSpec, radii: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if radii.len() != values.len() || radii.len() < 3 {
            return Err(Error::Invalid(
                "table needs >= 3 matching radii/values".into(),
            ));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(
                "radii must be nonnegative and strictly increasing".into(),
            ));
        }
        for i in 0..values.len() {
            let v = values[i];
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "kernel value {v:e} at r = {} is not positive",
                    radii[i]
                )));
            }
            if i > 0 && v > values[i - 1] {
                // quadrature noise at the last digits; anything larger is a failure
                if v > values[i - 1] * (1.0 + 1e-9) {
                    return Err(Error::Numerical(format!(
                        "kernel increases at r = {}: {:e} > {:e}",
                        radii[i],
                        v,
                        values[i - 1]
                    )));
                }
                values[i] = values[i - 1];
            }
        }
        let log_values: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let slopes = pchip_slopes(&radii, &log_values);
        let tail_exponent = spec.dim as f64 + spec.theta;
        let r_last = *radii.last().unwrap();
        let tail_constant = values.last().unwrap() * (1.0 + r_last).powf(tail_exponent);
        Ok(Self {
            spec,
            radii,
            values,
            tail_exponent,
            tail_constant,
            log_values,
            slopes,
        })
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// `G(r, 1)` by interpolation inside the table and the tail model beyond.
    pub fn profile(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max() {
            return self.tail_constant * (1.0 + r).powf(-self.tail_exponent);
        }
        if r <= self.radii[0] {
            return self.values[0];
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (self.radii[i], self.radii[i + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        let (y0, y1) = (self.log_values[i], self.log_values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1).exp()
    }

    /// `int_lo^{r_max} r^m G(r) w(r) dr` on the interpolant: Gauss-Legendre
    /// per table interval, tanh-sinh on the first one where `r^m` may be
    /// singular. `extra` adds panel breaks (kinks of `w`).
    fn radial_integral<W>(&self, m: f64, lo: f64, extra: &[f64], w: W) -> f64
    where
        W: Fn(f64) -> f64 + Sync,
    {
        let mut breaks: Vec<f64> = Vec::with_capacity(self.radii.len() + extra.len() + 1);
        breaks.push(lo);
        breaks.extend(self.radii.iter().copied().filter(|&r| r > lo));
        for &e in extra {
            if e > lo && e < self.r_max() {
                let k = breaks.partition_point(|&x| x < e);
                if breaks[k] != e {
                    breaks.insert(k, e);
                }
            }
        }
        let f = |r: f64| r.powf(m) * self.profile(r) * w(r);
        let (gx, gw) = &*GL8;
        let panel = |p: &[f64]| -> f64 {
            let (a, b) = (p[0], p[1]);
            if a == 0.0 {
                return tanh_sinh(|r, _, _| f(r), a, b, 1e-13)
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN);
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            half * gx
                .iter()
                .zip(gw)
                .map(|(x, wt)| wt * f(mid + half * x))
                .sum::<f64>()
        };
        breaks.par_windows(2).map(panel).sum()
    }

    /// Analytic tail `|S^{N-1}| c int_R^inf r^{N-1+a} (1+r)^{-N-theta} dr`.
    fn tail_moment(&self, a: f64, big_r: f64) -> f64 {
        if self.spec.theta >= 2.0 {
            // the Gaussian tail beyond the table is below double precision
            return 0.0;
        }
        self.spec.sphere_area()
            * self.tail_constant
            * tail_integral(self.spec.dim, self.spec.theta, a, big_r)
    }

    /// Total mass: product-trapezoid over the table plus the analytic tail.
    pub fn total_mass(&self) -> f64 {
        self.mass_beyond(0.0)
    }

    /// Unit-time mass outside the ball of radius `big_r`.
    pub fn mass_beyond(&self, big_r: f64) -> f64 {
        let n = self.spec.dim as f64;
        let area = self.spec.sphere_area();
        if big_r >= self.r_max() {
            if self.spec.theta >= 2.0 {
                return 0.0;
            }
            return self.tail_moment(0.0, big_r.max(1.0));
        }
        area * self.radial_integral(n - 1.0, big_r, &[], |_| 1.0)
            + self.tail_moment(0.0, self.r_max())
    }

    fn check_moment_exponent(&self, a: f64) -> Result<()> {
        if !(a >= 0.0) {
            return Err(Error::Invalid(format!(
                "moment exponent a = {a} must be >= 0"
            )));
        }
        if self.spec.theta < 2.0 && a >= self.spec.theta {
            return Err(Error::DivergentMoment {
                a,
                theta: self.spec.theta,
            });
        }
        Ok(())
    }

    /// `M_a(1) = int G(y,1) |y|^a dy`.
    pub fn unit_moment(&self, a: f64) -> Result<f64> {
        self.check_moment_exponent(a)?;
        let n = self.spec.dim as f64;
        Ok(
            self.spec.sphere_area() * self.radial_integral(n - 1.0 + a, 0.0, &[], |_| 1.0)
                + self.tail_moment(a, self.r_max()),
        )
    }

    /// CSV with header `r,G`, 12 significant digits in fixed-point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,G\n");
        for (r, g) in self.radii.iter().zip(&self.values) {
            out.push_str(&fixed_sig(*r, 12));
            out.push(',');
            out.push_str(&fixed_sig(*g, 12));
            out.push('\n');
        }
        out
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    Ok(())
}

/// `G(x, t) = t^{-N/theta} G(t^{-1/theta} x, 1)`.
pub fn kernel_at(table: &KernelTable, x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    let theta = table.spec.theta;
    let s = t.powf(-1.0 / theta);
    let r = x.iter().map(|v| (v * s) * (v * s)).sum::<f64>().sqrt();
    Ok(t.powf(-(table.spec.dim as f64) / theta) * table.profile(r))
}

/// `M_a(t) = t^{a/theta} M_a(1)`.
pub fn kernel_moment(table: &KernelTable, a: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(t.powf(a / table.spec.theta) * table.unit_moment(a)?)
}

/// `M_a(t)` by adaptive quadrature of `|y|^a G(y, t)` at the physical time,
/// independent of the scaling shortcut used by [`kernel_moment`].
pub fn kernel_moment_direct(table: &KernelTable, a: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    table.check_moment_exponent(a)?;
    let spec = table.spec;
    let n = spec.dim as f64;
    let scale = t.powf(1.0 / spec.theta);
    let mut e1 = vec![0.0; spec.dim];
    let mut radial = |rho: f64| -> f64 {
        e1[0] = rho;
        let g = kernel_at(table, &e1, t).unwrap_or(f64::NAN);
        spec.sphere_area() * rho.powf(n - 1.0 + a) * g
    };
    let quad = Adaptive {
        rel_tol: 1e-10,
        abs_tol: 1e-14 * scale.powf(a),
        max_depth: 40,
    };
    let mut total = quad.integrate(&mut radial, 0.0, scale)?.value;
    let outer = table.r_max() * scale;
    let mut lo = scale;
    while lo < outer {
        let hi = (2.0 * lo).min(outer);
        total += quad.integrate(&mut radial, lo, hi)?.value;
        lo = hi;
    }
    Ok(total + t.powf(a / spec.theta) * table.tail_moment(a, table.r_max()))
}

/// Spherical mean of `|y + z|^a` over `|y| = r`, with `d = |z|`.
fn angular_mean(dim: usize, a: f64, r: f64, d: f64) -> f64 {
    if d == 0.0 || r == 0.0 {
        return (r + d).powf(a);
    }
    match dim {
        1 => 0.5 * ((r + d).powf(a) + (r - d).abs().powf(a)),
        _ => {
            // (1/pi) int_0^pi (r^2 + d^2 - 2 r d cos phi)^{a/2}; the cusp at
            // phi = 0 when r = d sits at an endpoint
            let f = |dphi: f64| {
                let s = (0.5 * dphi).sin();
                ((r - d) * (r - d) + 4.0 * r * d * s * s).powf(0.5 * a)
            };
            tanh_sinh(|_, da, _| f(da), 0.0, std::f64::consts::PI, 1e-12)
                .map(|e| e.value / std::f64::consts::PI)
                .unwrap_or(f64::NAN)
        }
    }
}

/// `int G(y, t) |y + z|^a dy` for `N` in {1, 2}.
pub fn shifted_moment(table: &KernelTable, a: f64, z: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    table.check_moment_exponent(a)?;
    let spec = table.spec;
    if spec.dim > 2 {
        return Err(Error::Invalid("shifted moments support N in {1, 2}".into()));
    }
    if z.len() != spec.dim {
        return Err(Error::Invalid(format!(
            "shift has {} components, expected {}",
            z.len(),
            spec.dim
        )));
    }
    let scale = t.powf(1.0 / spec.theta);
    let d = z.iter().map(|v| v * v).sum::<f64>().sqrt() / scale;
    let n = spec.dim as f64;
    let body = table.radial_integral(n - 1.0, 0.0, &[d], |r| angular_mean(spec.dim, a, r, d));
    let big_r = table.r_max();
    let tail = (1.0 + d / big_r).powf(a) * table.tail_moment(a, big_r);
    let m = spec.sphere_area() * body + tail;
    if !m.is_finite() {
        return Err(Error::Numerical("shifted moment is not finite".into()));
    }
    Ok(scale.powf(a) * m)
}

/// Empirical band of `G(r,1) (1+r)^{N+theta}` over table radii `<= r_max`.
pub fn check_two_sided_bound(table: &KernelTable, r_max: f64) -> Result<TwoSidedBand> {
    if table.spec.theta >= 2.0 {
        return Err(Error::BoundNotApplicable(
            "the algebraic two-sided bound holds only for theta < 2".into(),
        ));
    }
    let mut m_low = f64::INFINITY;
    let mut m_high: f64 = 0.0;
    for (r, g) in table.radii.iter().zip(&table.values) {
        if *r > r_max {
            break;
        }
        let ratio = g * (1.0 + r).powf(table.tail_exponent);
        m_low = m_low.min(ratio);
        m_high = m_high.max(ratio);
    }
    if !(m_low > 0.0 && m_high.is_finite()) {
        return Err(Error::Numerical("empty or degenerate band".into()));
    }
    Ok(TwoSidedBand { m_low, m_high })
}
