//! The semigroup `S(t)` on grid fields and on measures.
//!
//! [`apply_semigroup`] propagates grid fields on the periodic torus by the
//! Fourier multiplier `exp(-t |xi|^theta)`. That multiplier rings below zero
//! on data that are not resolved by the grid, so measure data and the
//! solver use [`Propagator::CellKernel`] instead: circular convolution with
//! the exact cell integrals of `G(., t)`, which is positive and fixes
//! constants. Atoms are propagated with the free-space kernel sampled at
//! the nodes.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::kernel::{ball_volume, kernel_at, KernelSpec, KernelTable};
use crate::measure::MeasureData;
use crate::quadrature::gauss_legendre;

pub use crate::measure::ball_average_power;

/// Negative output below `-POSITIVITY_SLACK * max(1, |f|_inf)` is aliasing.
pub const POSITIVITY_SLACK: f64 = 1e-12;

/// Forward/inverse transforms and the symbol `|xi|^theta` for one grid.
pub struct Spectral {
    grid: Grid,
    symbol: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid, theta: f64) -> Self {
        let n = grid.n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let dk = PI / grid.half_width;
        let wavenumber = |k: usize| {
            let k = k as f64;
            let nf = n as f64;
            if k <= nf / 2.0 {
                k * dk
            } else {
                (k - nf) * dk
            }
        };
        let symbol = if grid.dim == 1 {
            (0..n).map(|k| wavenumber(k).abs().powf(theta)).collect()
        } else {
            let mut s = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    let (a, b) = (wavenumber(i), wavenumber(j));
                    s.push((a * a + b * b).powf(0.5 * theta));
                }
            }
            s
        };
        Self {
            grid,
            symbol,
            fwd,
            inv,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn transpose(data: &mut [Complex64], n: usize) {
        for j in 0..n {
            for i in (j + 1)..n {
                data.swap(j * n + i, i * n + j);
            }
        }
    }

    /// DFT of real samples. In two dimensions the result is stored
    /// transposed, which leaves the radially symmetric symbol unchanged.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n;
        let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fwd.process(&mut data);
        if self.grid.dim == 2 {
            Self::transpose(&mut data, n);
            self.fwd.process(&mut data);
        }
        data
    }

    /// Inverse of [`Spectral::forward`], returning the real part.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        let n = self.grid.n;
        self.inv.process(&mut data);
        if self.grid.dim == 2 {
            Self::transpose(&mut data, n);
            self.inv.process(&mut data);
        }
        let scale = 1.0 / self.grid.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// `exp(-t |xi|^theta)` on the spectral layout.
    pub fn multiplier(&self, t: f64) -> Vec<f64> {
        self.symbol.iter().map(|s| (-t * s).exp()).collect()
    }

    /// Applies a real multiplier in the spectral layout.
    pub fn apply_multiplier(&self, f: &Field, mult: &[f64]) -> Result<Field> {
        if f.grid() != self.grid || mult.len() != self.grid.len() {
            return Err(Error::Invalid("field and transform grids differ".into()));
        }
        let mut spec = self.forward(f.values());
        for (c, m) in spec.iter_mut().zip(mult) {
            *c *= m;
        }
        let raw = self.inverse(spec);
        Ok(Field::from_raw(
            self.grid,
            clamp_positive(raw, f.sup_norm())?,
        ))
    }

    /// `S(t) f` on the torus.
    pub fn apply(&self, f: &Field, t: f64) -> Result<Field> {
        if f.grid() != self.grid {
            return Err(Error::Invalid("field and transform grids differ".into()));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time t = {t} must be nonnegative")));
        }
        if t == 0.0 {
            return Ok(f.clone());
        }
        let mut spec = self.forward(f.values());
        for (c, m) in spec.iter_mut().zip(self.multiplier(t)) {
            *c *= m;
        }
        let raw = self.inverse(spec);
        Ok(Field::from_raw(
            self.grid,
            clamp_positive(raw, f.sup_norm())?,
        ))
    }
}

/// How grid densities are propagated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Fourier multiplier `exp(-t |xi|^theta)`.
    Spectral,
    /// Circular convolution with cell integrals of `G(., t)`.
    #[default]
    CellKernel,
}

static GL4: std::sync::LazyLock<(Vec<f64>, Vec<f64>)> =
    std::sync::LazyLock::new(|| gauss_legendre(4));

/// `int_{[a0,a1] x [b0,b1]} G(|u|, 1) du` in unit-time coordinates, on
/// `q x q` subcells (`q` per axis in one dimension).
fn cell_integral(table: &KernelTable, a: (f64, f64), b: Option<(f64, f64)>, q: usize) -> f64 {
    let (gx, gw) = &*GL4;
    let nodes = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        let w = (hi - lo) / q as f64;
        let mut out = Vec::with_capacity(4 * q);
        for i in 0..q {
            let c = lo + (i as f64 + 0.5) * w;
            for (x, wt) in gx.iter().zip(gw) {
                out.push((c + 0.5 * w * x, 0.5 * w * wt));
            }
        }
        out
    };
    let xs = nodes(a.0, a.1);
    match b {
        None => xs.iter().map(|(x, w)| w * table.profile(*x)).sum(),
        Some(b) => {
            let ys = nodes(b.0, b.1);
            xs.iter()
                .map(|(x, wx)| {
                    wx * ys
                        .iter()
                        .map(|(y, wy)| wy * table.profile(x.hypot(*y)))
                        .sum::<f64>()
                })
                .sum()
        }
    }
}

/// Subcells per axis so each resolves the local variation of `G(., 1)`
/// at unit-time distance `d` from the origin.
fn subdivisions(theta: f64, width: f64, d: f64, cap: usize) -> usize {
    let scale = if theta >= 2.0 {
        2.0 / d.max(1.0)
    } else {
        (0.25 * d).max(1.0)
    };
    ((2.0 * width / scale).ceil() as usize).clamp(1, cap)
}

/// Weights `w_m = int_{cell m} G(y, t) dy` in FFT index order, with the
/// mass outside the primary box spread uniformly over the torus.
pub fn cell_kernel_weights(table: &KernelTable, t: f64, grid: &Grid) -> Result<Vec<f64>> {
    grid.validate()?;
    if table.spec.dim != grid.dim {
        return Err(Error::Invalid("kernel and grid dimensions differ".into()));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    let theta = table.spec.theta;
    let s = t.powf(1.0 / theta);
    let n = grid.n;
    let width = grid.h() / s;
    let signed = |i: usize| {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    // distance from the origin to the nearest point of the cell at offset m
    let near = |m: f64| (m.abs() - 0.5).max(0.0) * width;
    let negligible = |d: f64| theta >= 2.0 && d > 60.0;
    let mut w = if grid.dim == 1 {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let m = signed(i);
                let d = near(m);
                if negligible(d) {
                    return 0.0;
                }
                let q = subdivisions(theta, width, d, 4096);
                cell_integral(table, ((m - 0.5) * width, (m + 0.5) * width), None, q)
            })
            .collect::<Vec<f64>>()
    } else {
        // eightfold symmetry: compute mx >= my >= 0 and mirror
        let half = n / 2;
        let pairs: Vec<(usize, usize)> = (0..=half)
            .flat_map(|a| (0..=a).map(move |b| (a, b)))
            .collect();
        let vals: Vec<f64> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let (ma, mb) = (a as f64, b as f64);
                let d = near(ma).hypot(near(mb));
                if negligible(d) {
                    return 0.0;
                }
                let q = subdivisions(theta, width, d, 64);
                cell_integral(
                    table,
                    ((ma - 0.5) * width, (ma + 0.5) * width),
                    Some(((mb - 0.5) * width, (mb + 0.5) * width)),
                    q,
                )
            })
            .collect();
        let lookup: HashMap<(usize, usize), f64> = pairs.into_iter().zip(vals).collect();
        let fold = |i: usize| if i <= half { i } else { n - i };
        (0..n * n)
            .map(|k| {
                let (a, b) = (fold(k % n), fold(k / n));
                lookup[&(a.max(b), a.min(b))]
            })
            .collect()
    };
    let total: f64 = w.iter().sum();
    let missing = 1.0 - total;
    if missing >= 0.0 {
        let share = missing / w.len() as f64;
        w.iter_mut().for_each(|v| *v += share);
    } else {
        w.iter_mut().for_each(|v| *v /= total);
    }
    Ok(w)
}

/// Real multiplier of the cell-kernel convolution in the spectral layout.
pub fn cell_kernel_multiplier(
    table: &KernelTable,
    t: f64,
    spectral: &Spectral,
) -> Result<Vec<f64>> {
    let w = cell_kernel_weights(table, t, &spectral.grid())?;
    Ok(spectral.forward(&w).into_iter().map(|c| c.re).collect())
}

/// `S(t) f` with the chosen propagator.
pub fn propagate(f: &Field, table: &KernelTable, t: f64, how: Propagator) -> Result<Field> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time t = {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let spectral = Spectral::new(f.grid(), table.spec.theta);
    match how {
        Propagator::Spectral => spectral.apply(f, t),
        Propagator::CellKernel => {
            let m = cell_kernel_multiplier(table, t, &spectral)?;
            spectral.apply_multiplier(f, &m)
        }
    }
}

/// Clamp roundoff negatives; larger negatives signal aliasing.
pub(crate) fn clamp_positive(mut raw: Vec<f64>, scale: f64) -> Result<Vec<f64>> {
    let slack = POSITIVITY_SLACK * scale.max(1.0);
    let mut min_value = 0.0f64;
    for v in raw.iter_mut() {
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "semigroup output {v} is not finite"
            )));
        }
        if *v < 0.0 {
            min_value = min_value.min(*v);
            *v = 0.0;
        }
    }
    if min_value < -slack {
        return Err(Error::Aliasing { min_value });
    }
    Ok(raw)
}

/// `S(t) f` for a nonnegative grid field.
pub fn apply_semigroup(f: &Field, spec: &KernelSpec, t: f64) -> Result<Field> {
    spec.validate()?;
    if spec.dim != f.grid().dim {
        return Err(Error::Invalid("kernel and field dimensions differ".into()));
    }
    Spectral::new(f.grid(), spec.theta).apply(f, t)
}

/// Contribution of the atoms of `mu` at time `t`, sampled at the nodes.
pub(crate) fn atoms_at(
    mu: &MeasureData,
    table: &KernelTable,
    t: f64,
    grid: &Grid,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    for a in mu.atoms.iter().filter(|a| a.mass > 0.0) {
        let vals = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let x = grid.node(k);
                let d: Vec<f64> = (0..grid.dim).map(|i| x[i] - a.location[i]).collect();
                kernel_at(table, &d, t).map(|g| a.mass * g)
            })
            .collect::<Result<Vec<f64>>>()?;
        out.iter_mut().zip(vals).for_each(|(o, v)| *o += v);
    }
    Ok(out)
}

/// `S(t) mu` on `grid`: free-space kernel for atoms, cell-kernel
/// propagation for the density.
pub fn apply_to_measure(
    mu: &MeasureData,
    table: &KernelTable,
    t: f64,
    grid: &Grid,
) -> Result<Field> {
    apply_to_measure_with(mu, table, t, grid, Propagator::CellKernel)
}

pub fn apply_to_measure_with(
    mu: &MeasureData,
    table: &KernelTable,
    t: f64,
    grid: &Grid,
    how: Propagator,
) -> Result<Field> {
    grid.validate()?;
    if mu.dim != grid.dim || table.spec.dim != grid.dim {
        return Err(Error::Invalid(
            "measure, kernel and grid dimensions differ".into(),
        ));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time t = {t} must be nonnegative")));
    }
    if t == 0.0 && mu.has_atoms() {
        return Err(Error::AtomicTrace);
    }
    let mut values = if mu.has_atoms() {
        atoms_at(mu, table, t, grid)?
    } else {
        vec![0.0; grid.len()]
    };
    if let Some(d) = &mu.density {
        let f = d.to_field(grid)?;
        let s = propagate(&f, table, t, how)?;
        values.iter_mut().zip(s.values()).for_each(|(v, w)| *v += w);
    }
    Ok(Field::from_raw(*grid, values))
}

/// Open-ball measure `mu(B(z, sigma))`.
pub fn ball_measure(mu: &MeasureData, z: &[f64], sigma: f64) -> Result<f64> {
    mu.ball_measure(z, sigma)
}

/// `|S(t) mu|_inf t^{N/theta} / sup_z mu(B(z, t^{1/theta}))`, the sup taken
/// over grid nodes and atom locations.
pub fn sup_bound_statistic(
    mu: &MeasureData,
    table: &KernelTable,
    t: f64,
    grid: &Grid,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    if mu.is_zero() {
        return Err(Error::Undefined(
            "sup-bound statistic of the zero measure".into(),
        ));
    }
    let theta = table.spec.theta;
    let n = grid.dim as f64;
    let s = apply_to_measure(mu, table, t, grid)?;
    let radius = t.powf(1.0 / theta);
    let mut centres: Vec<Vec<f64>> = (0..grid.len()).map(|k| grid.point(k)).collect();
    centres.extend(mu.atoms.iter().map(|a| a.location.clone()));
    let sup = centres
        .par_iter()
        .map(|z| mu.ball_measure(z, radius))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if !(sup > 0.0) {
        return Err(Error::Undefined(
            "no ball of radius t^{1/theta} carries mass".into(),
        ));
    }
    Ok(s.sup_norm() * t.powf(n / theta) / sup)
}

/// `1/|B(0,1)|`, the value of the sup-bound statistic on constants.
pub fn constant_sup_bound(dim: usize) -> f64 {
    1.0 / ball_volume(dim)
}
