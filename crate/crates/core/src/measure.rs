//! Nonnegative initial data: atoms plus an optional density.
//!
//! Densities are either sampled grid fields or exact radial laws
//! `f(x) = A rho^{-a} [log(e + 1/rho)]^{-b} 1{rho < R}`, `rho = |x - c|`.
//! Radial laws keep ball measures, cell averages and powers `f^r` exact,
//! which matters because the interesting data are singular at `c`.

use rayon::prelude::*;
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::kernel::sphere_area;
use crate::quadrature::{gauss_legendre, tanh_sinh, Adaptive};

const TWO_PI: f64 = 2.0 * PI;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_point(dim: usize, x: &[f64], what: &str) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Invalid(format!(
            "{what} has {} components, expected {dim}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{what} is not finite")));
    }
    Ok(())
}

/// Angle of the circle `|y| = rho` inside the disk `B(w, sigma)`, `|w| = d`.
pub(crate) fn disk_arc(d: f64, sigma: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return if d < sigma { TWO_PI } else { 0.0 };
    }
    if rho + d <= sigma {
        return TWO_PI;
    }
    if rho >= d + sigma || rho <= d - sigma {
        return 0.0;
    }
    let c = ((d * d + rho * rho - sigma * sigma) / (2.0 * d * rho)).clamp(-1.0, 1.0);
    2.0 * c.acos()
}

/// Axis-aligned box `[x0, x1] x [y0, y1]`, coordinates relative to a centre.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    fn min_dist(&self) -> f64 {
        let dx = self.x0.max(-self.x1).max(0.0);
        let dy = self.y0.max(-self.y1).max(0.0);
        dx.hypot(dy)
    }

    fn max_dist(&self) -> f64 {
        let dx = self.x0.abs().max(self.x1.abs());
        let dy = self.y0.abs().max(self.y1.abs());
        dx.hypot(dy)
    }

    /// Radii at which the arc length inside the box changes shape.
    fn breaks(&self) -> Vec<f64> {
        let mut b = vec![self.min_dist(), self.max_dist()];
        for x in [self.x0, self.x1] {
            b.push(x.abs());
            for y in [self.y0, self.y1] {
                b.push(x.hypot(y));
            }
        }
        for y in [self.y0, self.y1] {
            b.push(y.abs());
        }
        b
    }

    /// Angle of the circle `|y| = rho` inside the box.
    pub(crate) fn arc(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return if self.contains(0.0, 0.0) { TWO_PI } else { 0.0 };
        }
        let mut angles: Vec<f64> = Vec::with_capacity(8);
        for c in [self.x0, self.x1] {
            if c.abs() < rho {
                let a = (c / rho).acos();
                angles.push(a);
                angles.push(TWO_PI - a);
            }
        }
        for c in [self.y0, self.y1] {
            if c.abs() < rho {
                let a = (c / rho).asin();
                angles.push(a.rem_euclid(TWO_PI));
                angles.push(PI - a);
            }
        }
        if angles.is_empty() {
            return if self.contains(rho, 0.0) { TWO_PI } else { 0.0 };
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = 0.0;
        for i in 0..angles.len() {
            let a = angles[i];
            let b = if i + 1 < angles.len() {
                angles[i + 1]
            } else {
                angles[0] + TWO_PI
            };
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            if self.contains(rho * mid.cos(), rho * mid.sin()) {
                total += b - a;
            }
        }
        total
    }
}

/// `int_a^b f(rho) rho arc(rho) drho` over pieces between sorted breaks;
/// pieces where the arc is the full circle use the exact radial mass.
fn polar_integral<F, M, A>(f: F, mass: M, arc: A, mut breaks: Vec<f64>, upper: f64) -> f64
where
    F: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
    A: Fn(f64) -> f64,
{
    breaks.retain(|b| b.is_finite());
    breaks.push(0.0);
    breaks.iter_mut().for_each(|b| *b = b.min(upper).max(0.0));
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = arc(0.5 * (a + b));
        if mid == 0.0 {
            continue;
        }
        if mid >= TWO_PI * (1.0 - 1e-14) {
            total += mass(b) - mass(a);
            continue;
        }
        let piece = tanh_sinh(|r, _, _| f(r) * r * arc(r), a, b, 1e-11)
            .map(|e| e.value)
            .unwrap_or_else(|e| match e {
                Error::Quadrature { estimate, .. } => estimate,
                _ => f64::NAN,
            });
        total += piece;
    }
    total
}

/// Exact radial law `A rho^{-a} [log(e + 1/rho)]^{-b}` on `rho < R` around a centre.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLaw {
    pub dim: usize,
    pub amplitude: f64,
    pub exponent: f64,
    pub log_exponent: f64,
    pub cutoff: f64,
    pub centre: Vec<f64>,
}

impl RadialLaw {
    pub fn new(
        dim: usize,
        amplitude: f64,
        exponent: f64,
        log_exponent: f64,
        cutoff: f64,
        centre: &[f64],
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Invalid(format!(
                "profiles support N in {{1, 2}}, got {dim}"
            )));
        }
        check_point(dim, centre, "profile centre")?;
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::Invalid(format!(
                "amplitude {amplitude} must be finite and nonnegative"
            )));
        }
        if !(cutoff > 0.0) {
            return Err(Error::Invalid(format!(
                "truncation radius {cutoff} must be positive"
            )));
        }
        if !exponent.is_finite() || !log_exponent.is_finite() {
            return Err(Error::Invalid("profile exponents must be finite".into()));
        }
        let n = dim as f64;
        let integrable = exponent < n || (exponent == n && log_exponent > 1.0);
        if !integrable {
            return Err(Error::Invalid(format!(
                "|x|^-{exponent} [log]^-{log_exponent} is not locally integrable in dimension {dim}"
            )));
        }
        Ok(Self {
            dim,
            amplitude,
            exponent,
            log_exponent,
            cutoff,
            centre: centre.to_vec(),
        })
    }

    /// Density at distance `rho` from the centre.
    pub fn value(&self, rho: f64) -> f64 {
        if rho >= self.cutoff || self.amplitude == 0.0 {
            return 0.0;
        }
        let mut v = self.amplitude * rho.powf(-self.exponent);
        if self.log_exponent != 0.0 {
            v *= (E + 1.0 / rho).ln().powf(-self.log_exponent);
        }
        v
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.centre).map(|(a, c)| a - c).collect();
        self.value(norm(&d))
    }

    /// `int_0^rho s^{N-1-a} [log(e+1/s)]^{-b} ds` without amplitude or sphere factor.
    fn shape_mass(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let n = self.dim as f64;
        let (a, b) = (self.exponent, self.log_exponent);
        if b == 0.0 {
            return rho.powf(n - a) / (n - a);
        }
        if a == n {
            // w = log(e + 1/s): int_W^inf w^{-b} e^w/(e^w - e) dw
            let inv = 1.0 / rho;
            let big_w = (E + inv).ln();
            let head = big_w.powf(1.0 - b) / (b - 1.0);
            let g = |v: f64| {
                let w = big_w + v;
                let denom = E * v.exp_m1() + v.exp() * inv;
                w.powf(-b) * E / denom
            };
            // the v = 0 end behaves like rho e / v when rho is large; use tanh-sinh there
            let mut rest = tanh_sinh(|v, _, _| g(v), 0.0, 1.0, 1e-13)
                .map(|e| e.value)
                .unwrap_or(f64::NAN);
            let quad = Adaptive::new(1e-12, 0.0);
            let mut lo = 1.0;
            loop {
                let part = quad
                    .integrate(g, lo, lo + 4.0)
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN);
                rest += part;
                lo += 4.0;
                if !(part > 1e-18 * (head + rest)) {
                    break;
                }
            }
            return head + rest;
        }
        tanh_sinh(
            |s, _, _| s.powf(n - 1.0 - a) * (E + 1.0 / s).ln().powf(-b),
            0.0,
            rho,
            1e-13,
        )
        .map(|e| e.value)
        .unwrap_or(f64::NAN)
    }

    /// `mu(B(c, rho))` for the law alone.
    pub fn radial_mass(&self, rho: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * sphere_area(self.dim) * self.shape_mass(rho.min(self.cutoff))
    }

    pub fn total_mass(&self) -> f64 {
        self.radial_mass(self.cutoff)
    }

    /// `f^r`, again a radial law.
    pub fn powered(&self, r: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.amplitude.powf(r),
            self.exponent * r,
            self.log_exponent * r,
            self.cutoff,
            &self.centre,
        )
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let mut out = self.clone();
        out.amplitude *= lambda;
        Self::new(
            out.dim,
            out.amplitude,
            out.exponent,
            out.log_exponent,
            out.cutoff,
            &out.centre,
        )
    }

    pub fn translated(&self, z: &[f64]) -> Self {
        let mut out = self.clone();
        out.centre.iter_mut().zip(z).for_each(|(c, d)| *c += d);
        out
    }

    /// `int_{lo}^{hi} f(rho) drho` on a piece away from the centre.
    fn line_integral(&self, lo: f64, hi: f64) -> f64 {
        let hi = hi.min(self.cutoff);
        if hi <= lo {
            return 0.0;
        }
        Adaptive::new(1e-13, 0.0)
            .integrate(|r| self.value(r), lo, hi)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }

    /// `int_{c + lo}^{c + hi} f(|x - c|) dx` in one dimension.
    fn interval_measure(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if lo >= 0.0 {
            self.line_integral_1d(lo, hi)
        } else if hi <= 0.0 {
            self.line_integral_1d(-hi, -lo)
        } else {
            self.line_integral_1d(0.0, -lo) + self.line_integral_1d(0.0, hi)
        }
    }

    fn line_integral_1d(&self, lo: f64, hi: f64) -> f64 {
        if lo == 0.0 {
            0.5 * self.radial_mass(hi)
        } else {
            self.line_integral(lo, hi)
        }
    }

    /// `int_{rect} f` in two dimensions, rectangle relative to the centre.
    fn rect_measure(&self, rect: Rect) -> f64 {
        let mut breaks = rect.breaks();
        breaks.push(self.cutoff);
        polar_integral(
            |r| self.value(r),
            |r| self.radial_mass(r),
            |r| rect.arc(r),
            breaks,
            self.cutoff.min(rect.max_dist()),
        )
    }

    /// Measure of the open ball `B(z, sigma)`.
    pub fn ball_measure(&self, z: &[f64], sigma: f64) -> f64 {
        if self.amplitude == 0.0 || sigma <= 0.0 {
            return 0.0;
        }
        let w: Vec<f64> = z.iter().zip(&self.centre).map(|(a, c)| a - c).collect();
        let d = norm(&w);
        if self.dim == 1 {
            return self.interval_measure(w[0] - sigma, w[0] + sigma);
        }
        if d == 0.0 {
            return self.radial_mass(sigma);
        }
        polar_integral(
            |r| self.value(r),
            |r| self.radial_mass(r),
            |r| disk_arc(d, sigma, r),
            vec![(sigma - d).abs(), sigma + d, self.cutoff],
            (sigma + d).min(self.cutoff),
        )
    }

    /// Average of `f` over cell `k` of `grid`.
    pub fn cell_average(&self, grid: &Grid, k: usize) -> f64 {
        let h = grid.h();
        let p = grid.node(k);
        let x0 = p[0] - self.centre[0];
        if self.dim == 1 {
            return self.interval_measure(x0 - 0.5 * h, x0 + 0.5 * h) / h;
        }
        let y0 = p[1] - self.centre[1];
        let rect = Rect {
            x0: x0 - 0.5 * h,
            x1: x0 + 0.5 * h,
            y0: y0 - 0.5 * h,
            y1: y0 + 0.5 * h,
        };
        let (dmin, dmax) = (rect.min_dist(), rect.max_dist());
        if dmin >= self.cutoff {
            return 0.0;
        }
        let near = dmin < 2.0 * h;
        let straddles = dmax > self.cutoff;
        if near || straddles {
            return self.rect_measure(rect) / (h * h);
        }
        let (gx, gw) = &*GL6;
        let mut s = 0.0;
        for (xi, wi) in gx.iter().zip(gw) {
            for (yj, wj) in gx.iter().zip(gw) {
                let x = x0 + 0.5 * h * xi;
                let y = y0 + 0.5 * h * yj;
                s += wi * wj * self.value(x.hypot(y));
            }
        }
        s * 0.25
    }

    /// Cell averages on every node of `grid`.
    pub fn to_field(&self, grid: &Grid) -> Result<Field> {
        if grid.dim != self.dim {
            return Err(Error::Invalid("profile and grid dimensions differ".into()));
        }
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| self.cell_average(grid, k))
            .collect();
        Field::new(*grid, values)
    }
}

static GL6: std::sync::LazyLock<(Vec<f64>, Vec<f64>)> =
    std::sync::LazyLock::new(|| gauss_legendre(6));

/// Absolutely continuous part of a measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Grid(Field),
    Profile(RadialLaw),
}

impl Density {
    pub fn dim(&self) -> usize {
        match self {
            Density::Grid(f) => f.grid().dim,
            Density::Profile(l) => l.dim,
        }
    }

    /// Representation on `grid` as cell averages.
    pub fn to_field(&self, grid: &Grid) -> Result<Field> {
        match self {
            Density::Grid(f) if f.grid() == *grid => Ok(f.clone()),
            Density::Grid(_) => Err(Error::Invalid(
                "grid density does not live on the requested grid".into(),
            )),
            Density::Profile(l) => l.to_field(grid),
        }
    }

    pub fn ball_measure(&self, z: &[f64], sigma: f64) -> f64 {
        match self {
            Density::Profile(l) => l.ball_measure(z, sigma),
            Density::Grid(f) => grid_ball_measure(f, z, sigma),
        }
    }

    /// `f^r`, exact for radial laws, cellwise for grids.
    pub fn powered(&self, r: f64) -> Result<Self> {
        match self {
            Density::Profile(l) => Ok(Density::Profile(l.powered(r)?)),
            Density::Grid(f) => Ok(Density::Grid(Field::new(
                f.grid(),
                f.values().iter().map(|v| v.powf(r)).collect(),
            )?)),
        }
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        match self {
            Density::Profile(l) => Ok(Density::Profile(l.scaled(lambda)?)),
            Density::Grid(f) => Ok(Density::Grid(f.scaled(lambda)?)),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Density::Profile(l) => l.total_mass(),
            Density::Grid(f) => f.mass(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Density::Profile(l) => l.amplitude == 0.0,
            Density::Grid(f) => f.values().iter().all(|v| *v == 0.0),
        }
    }
}

/// Ball measure of a grid density, boundary cells weighted by covered volume.
fn grid_ball_measure(f: &Field, z: &[f64], sigma: f64) -> f64 {
    let g = f.grid();
    let h = g.h();
    let vals = f.values();
    let range = |c: f64| {
        let lo = ((c - sigma + g.half_width) / h - 0.5).floor().max(0.0) as usize;
        let hi = (((c + sigma + g.half_width) / h + 0.5).ceil() as usize).min(g.n - 1);
        lo..=hi
    };
    let mut total = 0.0;
    if g.dim == 1 {
        for i in range(z[0]) {
            let x = g.coord(i);
            let overlap =
                ((x + 0.5 * h).min(z[0] + sigma) - (x - 0.5 * h).max(z[0] - sigma)).max(0.0);
            total += vals[i] * overlap;
        }
        return total;
    }
    for j in range(z[1]) {
        for i in range(z[0]) {
            let v = vals[j * g.n + i];
            if v == 0.0 {
                continue;
            }
            let rect = Rect {
                x0: g.coord(i) - 0.5 * h - z[0],
                x1: g.coord(i) + 0.5 * h - z[0],
                y0: g.coord(j) - 0.5 * h - z[1],
                y1: g.coord(j) + 0.5 * h - z[1],
            };
            if rect.min_dist() >= sigma {
                continue;
            }
            let area = if rect.max_dist() <= sigma {
                h * h
            } else {
                disk_rect_area(rect, sigma)
            };
            total += v * area;
        }
    }
    total
}

/// Area of `B(0, sigma) ∩ rect`.
pub(crate) fn disk_rect_area(rect: Rect, sigma: f64) -> f64 {
    let mut breaks = rect.breaks();
    breaks.push(sigma);
    polar_integral(
        |_| 1.0,
        |r| PI * r * r,
        |r| rect.arc(r),
        breaks,
        sigma.min(rect.max_dist()),
    )
}

/// Point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// Nonnegative Radon measure: finitely many atoms plus an optional density.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureData {
    pub dim: usize,
    pub atoms: Vec<Atom>,
    pub density: Option<Density>,
}

impl MeasureData {
    pub fn new(dim: usize, atoms: Vec<Atom>, density: Option<Density>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Invalid(format!(
                "measures support N in {{1, 2}}, got {dim}"
            )));
        }
        for a in &atoms {
            check_point(dim, &a.location, "atom location")?;
            if !(a.mass >= 0.0) || !a.mass.is_finite() {
                return Err(Error::Invalid(format!(
                    "atom mass {} must be nonnegative",
                    a.mass
                )));
            }
        }
        if let Some(d) = &density {
            if d.dim() != dim {
                return Err(Error::Invalid(
                    "density dimension differs from measure".into(),
                ));
            }
        }
        Ok(Self {
            dim,
            atoms,
            density,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            atoms: vec![],
            density: None,
        }
    }

    pub fn dirac(dim: usize, location: &[f64], mass: f64) -> Result<Self> {
        Self::new(
            dim,
            vec![Atom {
                location: location.to_vec(),
                mass,
            }],
            None,
        )
    }

    pub fn from_density(density: Density) -> Self {
        Self {
            dim: density.dim(),
            atoms: vec![],
            density: Some(density),
        }
    }

    pub fn has_atoms(&self) -> bool {
        self.atoms.iter().any(|a| a.mass > 0.0)
    }

    pub fn is_zero(&self) -> bool {
        !self.has_atoms() && self.density.as_ref().is_none_or(|d| d.is_zero())
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location.clone(),
                mass: a.mass * lambda,
            })
            .collect();
        let density = self
            .density
            .as_ref()
            .map(|d| d.scaled(lambda))
            .transpose()?;
        Self::new(self.dim, atoms, density)
    }

    /// `mu(B(z, sigma))` for the open ball.
    pub fn ball_measure(&self, z: &[f64], sigma: f64) -> Result<f64> {
        check_point(self.dim, z, "ball centre")?;
        if !(sigma > 0.0) {
            return Err(Error::Invalid(format!(
                "ball radius {sigma} must be positive"
            )));
        }
        let mut total = 0.0;
        for a in &self.atoms {
            let d: Vec<f64> = a.location.iter().zip(z).map(|(p, q)| p - q).collect();
            if norm(&d) < sigma {
                total += a.mass;
            }
        }
        if let Some(d) = &self.density {
            total += d.ball_measure(z, sigma);
        }
        Ok(total)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>()
            + self.density.as_ref().map_or(0.0, |d| d.total_mass())
    }
}

/// Average of `|x|^a` over `B(z, sigma)`.
pub fn ball_average_power(z: &[f64], sigma: f64, a: f64, dim: usize) -> Result<f64> {
    check_point(dim, z, "ball centre")?;
    if !(sigma > 0.0) {
        return Err(Error::Invalid(format!(
            "ball radius {sigma} must be positive"
        )));
    }
    let n = dim as f64;
    if !(a > -n) {
        return Err(Error::Invalid(format!(
            "|x|^{a} is not integrable near the origin in dimension {dim}"
        )));
    }
    if norm(z) == 0.0 {
        return Ok(n * sigma.powf(a) / (n + a));
    }
    if dim == 1 {
        let anti = |x: f64| x.signum() * x.abs().powf(a + 1.0) / (a + 1.0);
        return Ok((anti(z[0] + sigma) - anti(z[0] - sigma)) / (2.0 * sigma));
    }
    let law = RadialLaw::new(dim, 1.0, -a, 0.0, f64::INFINITY, &vec![0.0; dim])?;
    Ok(law.ball_measure(z, sigma) / (crate::kernel::ball_volume(dim) * sigma.powi(dim as i32)))
}
