//! Uniform periodic grids on `[-L, L)^N` and nonnegative fields on them.
//!
//! Node `i` sits at `-L + i h` with `h = 2L/n`; the origin is node `n/2`
//! and every node is the centre of its cell. Two-dimensional data are
//! stored row-major with `x` varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fixed_sig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        let g = Self { dim, half_width, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Invalid(format!(
                "grid dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::Invalid(format!(
                "half width L = {} must be positive",
                self.half_width
            )));
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "points per axis n = {} must be a power of two >= 16",
                self.n
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along an axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    /// Node coordinates of flat index `k` (second entry 0 in one dimension).
    pub fn node(&self, k: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.coord(k), 0.0]
        } else {
            [self.coord(k % self.n), self.coord(k / self.n)]
        }
    }

    /// Node coordinates as a point of the grid dimension.
    pub fn point(&self, k: usize) -> Vec<f64> {
        self.node(k)[..self.dim].to_vec()
    }

    /// Flat index of the node at the origin.
    pub fn origin_index(&self) -> usize {
        let c = self.n / 2;
        if self.dim == 1 {
            c
        } else {
            c * self.n + c
        }
    }

    /// Index of the cell containing coordinate `x` along an axis, if inside.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let i = ((x + self.half_width) / self.h() + 0.5).floor();
        if i >= 0.0 && (i as usize) < self.n {
            Some(i as usize)
        } else {
            None
        }
    }
}

/// Nonnegative samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "field values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn from_fn<F: FnMut(&[f64]) -> f64>(grid: Grid, mut f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Riemann sum `sum f h^N`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| v * lambda).collect())
    }

    /// Pointwise sum of two fields on the same grid.
    pub fn add(&self, other: &Field) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Invalid("fields live on different grids".into()));
        }
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// `max_k |self_k - other_k|`.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Periodic bilinear (or linear) interpolation at an arbitrary point.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let g = self.grid;
        let h = g.h();
        let n = g.n as i64;
        let locate = |v: f64| {
            let s = (v + g.half_width) / h;
            let i0 = s.floor();
            let w = s - i0;
            let i0 = (i0 as i64).rem_euclid(n) as usize;
            (i0, (i0 + 1) % g.n, w)
        };
        if g.dim == 1 {
            let (i0, i1, w) = locate(x[0]);
            (1.0 - w) * self.values[i0] + w * self.values[i1]
        } else {
            let (i0, i1, wx) = locate(x[0]);
            let (j0, j1, wy) = locate(x[1]);
            let at = |i: usize, j: usize| self.values[j * g.n + i];
            (1.0 - wy) * ((1.0 - wx) * at(i0, j0) + wx * at(i1, j0))
                + wy * ((1.0 - wx) * at(i0, j1) + wx * at(i1, j1))
        }
    }

    /// CSV with columns `x[,y],value`.
    pub fn to_csv(&self) -> String {
        let mut out = if self.grid.dim == 1 {
            String::from("x,value\n")
        } else {
            String::from("x,y,value\n")
        };
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.node(k);
            out.push_str(&fixed_sig(p[0], 12));
            out.push(',');
            if self.grid.dim == 2 {
                out.push_str(&fixed_sig(p[1], 12));
                out.push(',');
            }
            out.push_str(&fixed_sig(*v, 12));
            out.push('\n');
        }
        out
    }

    /// Metadata sidecar `{dim, L, n, theta}`.
    pub fn metadata(&self, theta: f64) -> serde_json::Value {
        serde_json::json!({
            "dim": self.grid.dim,
            "L": self.grid.half_width,
            "n": self.grid.n,
            "theta": theta,
        })
    }
}
