//! Run configuration (`run.json`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::measure::MeasureData;
use crate::picard::{default_grid, SolverConfig};
use crate::problem::Problem;
use crate::profiles::ProfileSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub theta: f64,
    pub gamma: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Domain half-width.
    #[serde(rename = "L", default = "default_half_width")]
    pub half_width: f64,
    /// Grid points per axis; defaults to 1024 in 1D and 128 in 2D.
    #[serde(default)]
    pub n: Option<usize>,
    /// Overrides `solver.time_nodes` when present.
    #[serde(default)]
    pub time_nodes: Option<usize>,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub recursion: Option<RecursionConfig>,
    #[serde(default)]
    pub preset: Option<Preset>,
}

fn default_half_width() -> f64 {
    20.0
}

/// Parameters of the `check` family; all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Radius grid, decreasing.
    pub sigmas: Option<Vec<f64>>,
    pub z_set: Option<Vec<Vec<f64>>>,
    /// Off-origin centre for the `p = p_0` statistic and Lemma 4.1.
    pub z: Option<Vec<f64>>,
    /// Integrability exponent of the sufficient condition, default 1.2.
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    /// Supersolution sample times; default every node.
    pub samples: Option<Vec<f64>>,
    pub rho: Option<f64>,
    pub s_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionConfig {
    pub c1: f64,
    pub c2: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Ball mass and radius entering `f_k`.
    #[serde(default = "one")]
    pub mu_ball: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Time of the induction-step check; defaults to `T`.
    #[serde(default)]
    pub t: Option<f64>,
}

fn default_k() -> usize {
    60
}
fn one() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Unit Dirac at the origin against the necessary conditions.
    #[serde(rename = "remark12-dirac")]
    Remark12Dirac,
}

impl RunConfig {
    /// Parses and validates, reporting the JSON path of schema errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem()?;
        self.grid()?;
        self.solver_config().validate()?;
        if let Some(s) = &self.scan {
            if !(s.c_min > 0.0 && s.c_max > s.c_min) {
                return Err(Error::Config {
                    path: "scan".into(),
                    message: format!("need 0 < c_min < c_max, got [{}, {}]", s.c_min, s.c_max),
                });
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.dim, self.theta, self.gamma, self.p, self.horizon)
    }

    pub fn grid(&self) -> Result<Grid> {
        let n = match self.n {
            Some(n) => n,
            None => default_grid(self.dim)?.n,
        };
        Grid::new(self.dim, self.half_width, n)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = self.solver;
        if let Some(m) = self.time_nodes {
            cfg.time_nodes = m;
        }
        cfg
    }

    pub fn profile(&self) -> Result<&ProfileSpec> {
        self.profile.as_ref().ok_or_else(|| Error::Config {
            path: "profile".into(),
            message: "this command needs an initial profile".into(),
        })
    }

    pub fn measure(&self) -> Result<MeasureData> {
        self.profile()?.build(&self.problem()?, self.half_width)
    }
}
