//! Monotone Picard iteration for the mild formulation
//! `u(t) = S(t) mu + int_0^t S(t - s) V u(s)^p ds`.
//!
//! Time is discretized on uniform nodes `t_j = j T / M` with the
//! left-endpoint rule over the positive nodes, so the Duhamel term at
//! `t_j` sums `dt S(t_j - t_i) F(u(t_i))` for `1 <= i < j` and the first
//! interval `[0, t_1]` is dropped. The sum is formed in Fourier space with
//! one multiplier per time lag.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::kernel::{shared_table, KernelTable};
use crate::measure::{MeasureData, RadialLaw};
use crate::problem::Problem;
use crate::semigroup::{
    apply_to_measure_with, cell_kernel_multiplier, clamp_positive, Propagator, Spectral,
};

/// Slack for the pointwise monotonicity check, relative to `max(1, |u_k|_inf)`.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub blowup_threshold: f64,
    pub time_nodes: usize,
    /// Include the Hardy source; `false` leaves the linear problem.
    pub source: bool,
    pub propagator: Propagator,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            blowup_threshold: 1e10,
            time_nodes: 64,
            source: true,
            propagator: Propagator::CellKernel,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!(
                "solver tol = {} must be positive",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid("solver max_iter must be at least 1".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Invalid("blow-up threshold must be positive".into()));
        }
        if self.time_nodes < 1 {
            return Err(Error::Invalid("at least one time node is required".into()));
        }
        Ok(())
    }
}

/// Default spatial grid: `L = 20`, `n = 1024` in one dimension and `128` in two.
pub fn default_grid(dim: usize) -> Result<Grid> {
    Grid::new(dim, 20.0, if dim == 1 { 1024 } else { 128 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    BlowupProxy,
    IterationBudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub verdict: Verdict,
    /// Number of Duhamel updates performed.
    pub iterations: usize,
    /// `max_j |u_k(t_j)|_inf` for `k = 1, 2, ...`.
    pub sup_norm_history: Vec<f64>,
    pub residual: f64,
    pub wrap_contamination_estimate: f64,
    /// Smallest pointwise `u_{k+1} - u_k` seen over all updates.
    pub min_increment: f64,
    /// The same divided by `max(1, |u|_inf)` at its node.
    pub min_relative_increment: f64,
}

/// Smallest `u_{k+1} - u_k` over one update, also divided by
/// `max(1, |u|_inf)` at its node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub absolute: f64,
    pub relative: f64,
}

/// Iterate `u_k` at the positive time nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub problem: Problem,
    /// `t_0 = 0, t_1, ..., t_M = T`.
    pub time_nodes: Vec<f64>,
    /// `u_k(t_j)` for `j = 1..=M`.
    pub iterates: Vec<Field>,
    pub k: usize,
}

impl EvolutionState {
    pub fn sup_norm(&self) -> f64 {
        self.iterates.iter().fold(0.0, |m, f| m.max(f.sup_norm()))
    }

    /// Iterate at node time `t`, which must be one of the positive nodes.
    pub fn at(&self, t: f64) -> Result<&Field> {
        self.time_nodes[1..]
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * s.max(1.0))
            .map(|j| &self.iterates[j])
            .ok_or(Error::NodeMismatch(t))
    }
}

type PotentialKey = (usize, u64, usize, u64);
static POTENTIALS: LazyLock<Mutex<HashMap<PotentialKey, Arc<Vec<f64>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Cell averages of `|x|^{-gamma}` on `grid`.
pub fn hardy_potential(grid: &Grid, gamma: f64) -> Result<Arc<Vec<f64>>> {
    grid.validate()?;
    if !(gamma > 0.0) || gamma >= grid.dim as f64 {
        return Err(Error::Invalid(format!(
            "|x|^-{gamma} is not integrable on the origin cell in dimension {}",
            grid.dim
        )));
    }
    let key = (grid.dim, grid.half_width.to_bits(), grid.n, gamma.to_bits());
    if let Some(v) = POTENTIALS
        .lock()
        .expect("potential cache poisoned")
        .get(&key)
    {
        return Ok(v.clone());
    }
    let law = RadialLaw::new(
        grid.dim,
        1.0,
        gamma,
        0.0,
        f64::INFINITY,
        &vec![0.0; grid.dim],
    )?;
    let values = Arc::new(law.to_field(grid)?.into_values());
    let mut cache = POTENTIALS.lock().expect("potential cache poisoned");
    Ok(cache.entry(key).or_insert(values).clone())
}

/// `V_h u^p` with `V_h` the cell-averaged potential.
pub fn hardy_source(u: &Field, gamma: f64, p: f64) -> Result<Field> {
    let v = hardy_potential(&u.grid(), gamma)?;
    let values = u
        .values()
        .iter()
        .zip(v.iter())
        .map(|(u, v)| v * u.powf(p))
        .collect();
    Ok(Field::from_raw(u.grid(), values))
}

/// Precomputed operators for one `(problem, grid, config)`.
pub struct Solver {
    pub problem: Problem,
    pub grid: Grid,
    pub config: SolverConfig,
    table: Arc<KernelTable>,
    spectral: Spectral,
    potential: Arc<Vec<f64>>,
    /// `dt` times the propagator multiplier at lag `l dt`, `l = 1..M-1`, at index `l - 1`.
    lag: Vec<Vec<f64>>,
    nodes: Vec<f64>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("problem", &self.problem)
            .field("grid", &self.grid)
            .field("config", &self.config)
            .finish()
    }
}

impl Solver {
    pub fn new(problem: Problem, grid: Grid, config: SolverConfig) -> Result<Self> {
        problem.validate()?;
        grid.validate()?;
        config.validate()?;
        if grid.dim != problem.dim {
            return Err(Error::Invalid("grid and problem dimensions differ".into()));
        }
        let spec = problem.spec()?;
        let table = shared_table(&spec)?;
        let spectral = Spectral::new(grid, problem.theta);
        let potential = hardy_potential(&grid, problem.gamma)?;
        let m = config.time_nodes;
        let dt = problem.horizon / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|j| j as f64 * dt).collect();
        let lag = (1..m)
            .map(|l| {
                let t = l as f64 * dt;
                let mult = match config.propagator {
                    Propagator::Spectral => spectral.multiplier(t),
                    Propagator::CellKernel => cell_kernel_multiplier(&table, t, &spectral)?,
                };
                Ok(mult.into_iter().map(|v| v * dt).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            problem,
            grid,
            config,
            table,
            spectral,
            potential,
            lag,
            nodes,
        })
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn time_nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `S(t_j) mu` at every positive node.
    pub fn linear_part(&self, mu: &MeasureData) -> Result<Vec<Field>> {
        if mu.dim != self.grid.dim {
            return Err(Error::Invalid("measure and grid dimensions differ".into()));
        }
        self.nodes[1..]
            .iter()
            .map(|t| apply_to_measure_with(mu, &self.table, *t, &self.grid, self.config.propagator))
            .collect()
    }

    /// `u_1 = S(t) mu`.
    pub fn initial_state(&self, linear: &[Field]) -> EvolutionState {
        EvolutionState {
            problem: self.problem,
            time_nodes: self.nodes.clone(),
            iterates: linear.to_vec(),
            k: 1,
        }
    }

    /// `sum_{i<j} dt S(t_j - t_i) V u(t_i)^p` at every positive node.
    pub fn duhamel_integral(&self, u: &[Field]) -> Result<Vec<Field>> {
        if u.len() != self.config.time_nodes || u.iter().any(|f| f.grid() != self.grid) {
            return Err(Error::Invalid(
                "fields do not match the solver nodes".into(),
            ));
        }
        Ok(self
            .duhamel_terms(u)?
            .into_iter()
            .map(|v| Field::from_raw(self.grid, v))
            .collect())
    }

    fn duhamel_terms(&self, u: &[Field]) -> Result<Vec<Vec<f64>>> {
        let m = self.config.time_nodes;
        let len = self.grid.len();
        if !self.config.source {
            return Ok(vec![vec![0.0; len]; m]);
        }
        let p = self.problem.p;
        // the last node is never a source point
        let sources: Vec<Vec<Complex64>> = u[..m - 1]
            .par_iter()
            .map(|u| {
                let f: Vec<f64> = u
                    .values()
                    .iter()
                    .zip(self.potential.iter())
                    .map(|(u, v)| v * u.powf(p))
                    .collect();
                self.spectral.forward(&f)
            })
            .collect();
        (0..m)
            .into_par_iter()
            .map(|j| {
                // node t_{j+1} collects sources at t_1..t_j
                if j == 0 {
                    return Ok(vec![0.0; len]);
                }
                let mut acc = vec![Complex64::new(0.0, 0.0); len];
                for (i, src) in sources[..j].iter().enumerate() {
                    let mult = &self.lag[j - i - 1];
                    for ((a, s), w) in acc.iter_mut().zip(src).zip(mult) {
                        *a += s * w;
                    }
                }
                let raw = self.spectral.inverse(acc);
                let scale = raw.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                clamp_positive(raw, scale)
            })
            .collect()
    }

    /// One step `u_k -> u_{k+1}` with its smallest pointwise increment.
    pub fn duhamel_update(
        &self,
        state: &EvolutionState,
        linear: &[Field],
    ) -> Result<(EvolutionState, Increment)> {
        if state.iterates.len() != self.config.time_nodes || linear.len() != state.iterates.len() {
            return Err(Error::Invalid(
                "state does not match the solver time nodes".into(),
            ));
        }
        let terms = self.duhamel_terms(&state.iterates)?;
        let mut min_inc = f64::INFINITY;
        let mut min_rel = f64::INFINITY;
        let mut next = Vec::with_capacity(terms.len());
        for ((d, lin), old) in terms.into_iter().zip(linear).zip(&state.iterates) {
            let values: Vec<f64> = lin.values().iter().zip(&d).map(|(a, b)| a + b).collect();
            // transform roundoff scales with the largest value at the node
            let scale = values
                .iter()
                .fold(old.sup_norm(), |m, v| m.max(*v))
                .max(1.0);
            let slack = MONOTONE_SLACK * scale;
            for (v, o) in values.iter().zip(old.values()) {
                if !v.is_finite() {
                    return Err(Error::Numerical(format!("iterate value {v} is not finite")));
                }
                let inc = v - o;
                min_inc = min_inc.min(inc);
                min_rel = min_rel.min(inc / scale);
                if inc < -slack {
                    return Err(Error::Numerical(format!(
                        "monotonicity violated: u_(k+1) - u_k = {inc:e}"
                    )));
                }
            }
            next.push(Field::from_raw(self.grid, values));
        }
        Ok((
            EvolutionState {
                problem: state.problem,
                time_nodes: state.time_nodes.clone(),
                iterates: next,
                k: state.k + 1,
            },
            Increment {
                absolute: min_inc,
                relative: min_rel,
            },
        ))
    }

    /// Wrap-around proxy: kernel mass beyond `L/2` at the horizon.
    pub fn wrap_contamination(&self) -> f64 {
        let s = self.problem.horizon.powf(-1.0 / self.problem.theta);
        self.table.mass_beyond(0.5 * self.grid.half_width * s)
    }

    pub fn solve(&self, mu: &MeasureData) -> Result<(SolveReport, EvolutionState)> {
        let linear = self.linear_part(mu)?;
        let mut state = self.initial_state(&linear);
        let linear_sup = state.sup_norm();
        let mut history = vec![linear_sup];
        let mut doublings = 0;
        let mut min_increment = f64::INFINITY;
        let mut min_relative = f64::INFINITY;
        let mut residual = f64::INFINITY;
        let mut verdict = Verdict::IterationBudgetExceeded;
        let mut iterations = 0;
        while iterations < self.config.max_iter {
            let step = self.duhamel_update(&state, &linear);
            iterations += 1;
            let (next, inc) = match step {
                Ok(s) => s,
                // overflow after sustained growth counts as blow-up
                Err(Error::Numerical(_))
                    if history.last().copied().unwrap_or(0.0) > 1e3 * linear_sup.max(1e-300) =>
                {
                    verdict = Verdict::BlowupProxy;
                    break;
                }
                Err(e) => return Err(e),
            };
            min_increment = min_increment.min(inc.absolute);
            min_relative = min_relative.min(inc.relative);
            let change = next
                .iterates
                .iter()
                .zip(&state.iterates)
                .fold(0.0f64, |m, (a, b)| m.max(a.sup_distance(b)));
            let sup = next.sup_norm();
            residual = change / (1.0 + sup);
            let prev = *history.last().expect("history is never empty");
            history.push(sup);
            state = next;
            if sup > self.config.blowup_threshold {
                verdict = Verdict::BlowupProxy;
                break;
            }
            doublings = if sup >= 2.0 * prev { doublings + 1 } else { 0 };
            if doublings >= 3 && sup > 1e3 * linear_sup {
                verdict = Verdict::BlowupProxy;
                break;
            }
            if residual <= self.config.tol {
                verdict = Verdict::Converged;
                break;
            }
        }
        let report = SolveReport {
            verdict,
            iterations,
            sup_norm_history: history,
            residual,
            wrap_contamination_estimate: self.wrap_contamination(),
            min_increment: if min_increment.is_finite() {
                min_increment
            } else {
                0.0
            },
            min_relative_increment: if min_relative.is_finite() {
                min_relative
            } else {
                0.0
            },
        };
        Ok((report, state))
    }
}

/// Full solve with a fresh [`Solver`].
pub fn iterate_to_fixed_point(
    mu: &MeasureData,
    problem: &Problem,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<(SolveReport, EvolutionState)> {
    Solver::new(*problem, *grid, *cfg)?.solve(mu)
}
