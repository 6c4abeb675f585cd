//! Initial data catalog: truncated power laws, the log-corrected critical
//! profile, the Fujita profile `Psi`, Dirac masses and translates.
//!
//! Every profile is an exact radial law, so ball measures and the origin
//! cell come from radial integrals rather than from grid sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::measure::{Atom, Density, MeasureData, RadialLaw};
use crate::problem::Problem;

/// JSON form of a profile, e.g. `{"kind":"power","c":0.01,"a":0.75,"trunc":5.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Power {
        c: f64,
        a: f64,
        #[serde(default)]
        trunc: Option<f64>,
    },
    CriticalLog {
        c: f64,
        #[serde(default)]
        trunc: Option<f64>,
    },
    FujitaPsi {
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        trunc: Option<f64>,
    },
    Dirac {
        #[serde(default = "one")]
        mass: f64,
        #[serde(default)]
        at: Option<Vec<f64>>,
    },
    Translated {
        z: Vec<f64>,
        base: Box<ProfileSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::CriticalLog { .. } => "critical_log",
            Self::FujitaPsi { .. } => "fujita_psi",
            Self::Dirac { .. } => "dirac",
            Self::Translated { .. } => "translated",
        }
    }

    /// Amplitude of the outermost profile, the quantity a threshold scan varies.
    pub fn amplitude(&self) -> f64 {
        match self {
            Self::Power { c, .. } | Self::CriticalLog { c, .. } | Self::FujitaPsi { c, .. } => *c,
            Self::Dirac { mass, .. } => *mass,
            Self::Translated { base, .. } => base.amplitude(),
        }
    }

    pub fn with_amplitude(&self, v: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Power { c, .. } | Self::CriticalLog { c, .. } | Self::FujitaPsi { c, .. } => {
                *c = v
            }
            Self::Dirac { mass, .. } => *mass = v,
            Self::Translated { base, .. } => **base = base.with_amplitude(v),
        }
        out
    }

    /// Builds the measure; `half_width` is the domain half-width `L`, which
    /// sets the default truncation `L/4` and the support box `[-L/2, L/2]^N`.
    pub fn build(&self, problem: &Problem, half_width: f64) -> Result<MeasureData> {
        let n = problem.dim;
        let trunc = |t: &Option<f64>| t.unwrap_or(half_width / 4.0);
        let mu = match self {
            Self::Power { c, a, trunc: t } => make_power(n, *c, *a, trunc(t))?,
            Self::CriticalLog { c, trunc: t } => {
                make_critical_log(*c, n, problem.theta, problem.gamma, trunc(t))?
            }
            Self::FujitaPsi { c, trunc: t } => make_fujita_psi(problem, *c, trunc(t))?,
            Self::Dirac { mass, at } => {
                MeasureData::dirac(n, at.as_deref().unwrap_or(&vec![0.0; n]), *mass)?
            }
            Self::Translated { z, base } => {
                return translate(&base.build(problem, half_width)?, z, half_width)
            }
        };
        check_support(&mu, half_width)?;
        Ok(mu)
    }
}

/// `c |x|^{-a}` on `|x| < truncation`.
pub fn make_power(dim: usize, c: f64, a: f64, truncation: f64) -> Result<MeasureData> {
    if !(a >= 0.0) || a >= dim as f64 {
        return Err(Error::Invalid(format!(
            "power exponent a = {a} must lie in [0, N = {dim})"
        )));
    }
    radial(dim, c, a, 0.0, truncation)
}

/// `C |x|^{-N} [log(e + 1/|x|)]^{-N/(theta-gamma) - 1}` on `|x| < truncation`.
pub fn make_critical_log(
    c: f64,
    dim: usize,
    theta: f64,
    gamma: f64,
    truncation: f64,
) -> Result<MeasureData> {
    if !(theta > gamma) {
        return Err(Error::Invalid(format!(
            "need gamma < theta, got gamma = {gamma}, theta = {theta}"
        )));
    }
    let n = dim as f64;
    radial(dim, c, n, n / (theta - gamma) + 1.0, truncation)
}

/// `c Psi(x)`: `|x|^{-N} [log(e + 1/|x|)]^{-N/theta - 1}` at `p = p_0`,
/// `|x|^{-theta/(p-1)}` above it.
pub fn make_fujita_psi(problem: &Problem, c: f64, truncation: f64) -> Result<MeasureData> {
    let (n, theta, p, p0) = (problem.dim as f64, problem.theta, problem.p, problem.p0());
    if (p - p0).abs() <= 1e-12 * p0 {
        radial(problem.dim, c, n, n / theta + 1.0, truncation)
    } else if p > p0 {
        radial(problem.dim, c, theta / (p - 1.0), 0.0, truncation)
    } else {
        Err(Error::Invalid(format!(
            "Psi is defined for p >= p_0 = {p0}, got p = {p}"
        )))
    }
}

/// `C |z|^{gamma/(p-1)} Psi(x - z)`.
pub fn make_offorigin(
    problem: &Problem,
    c: f64,
    z: &[f64],
    truncation: f64,
    half_width: f64,
) -> Result<MeasureData> {
    let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let base = make_fujita_psi(
        problem,
        c * zn.powf(problem.gamma / (problem.p - 1.0)),
        truncation,
    )?;
    translate(&base, z, half_width)
}

fn radial(dim: usize, c: f64, a: f64, b: f64, truncation: f64) -> Result<MeasureData> {
    let law = RadialLaw::new(dim, c, a, b, truncation, &vec![0.0; dim])?;
    Ok(MeasureData::from_density(Density::Profile(law)))
}

/// Shifts atoms and density by `z`; the result must stay in `[-L/2, L/2]^N`.
pub fn translate(mu: &MeasureData, z: &[f64], half_width: f64) -> Result<MeasureData> {
    if z.len() != mu.dim || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!(
            "shift must be a finite point in R^{}",
            mu.dim
        )));
    }
    let atoms = mu
        .atoms
        .iter()
        .map(|a| Atom {
            location: a.location.iter().zip(z).map(|(x, d)| x + d).collect(),
            mass: a.mass,
        })
        .collect();
    let density = match &mu.density {
        None => None,
        Some(Density::Profile(law)) => Some(Density::Profile(law.translated(z))),
        Some(Density::Grid(f)) => Some(Density::Grid(shift_field(f, z)?)),
    };
    let out = MeasureData::new(mu.dim, atoms, density)?;
    check_support(&out, half_width)?;
    Ok(out)
}

/// `f(x - z)` by interpolation; exact when `z` is a multiple of the spacing.
fn shift_field(f: &Field, z: &[f64]) -> Result<Field> {
    let g = f.grid();
    let mut y = vec![0.0; g.dim];
    Field::from_fn(g, |x| {
        for i in 0..g.dim {
            y[i] = x[i] - z[i];
        }
        if y.iter().any(|v| v.abs() > g.half_width) {
            0.0
        } else {
            f.interpolate(&y)
        }
    })
}

fn check_support(mu: &MeasureData, half_width: f64) -> Result<()> {
    let bound = 0.5 * half_width * (1.0 + 1e-12);
    let escape = |what: String| {
        Err(Error::Domain(format!(
            "{what} leaves the data box [-{0}, {0}]^N",
            0.5 * half_width
        )))
    };
    for a in &mu.atoms {
        if a.location.iter().any(|v| v.abs() > bound) {
            return escape(format!("atom at {:?}", a.location));
        }
    }
    match &mu.density {
        Some(Density::Profile(law)) if law.amplitude > 0.0 => {
            if law.centre.iter().any(|c| c.abs() + law.cutoff > bound) {
                return escape(format!(
                    "profile of radius {} around {:?}",
                    law.cutoff, law.centre
                ));
            }
        }
        Some(Density::Grid(f)) => {
            let g = f.grid();
            for (k, v) in f.values().iter().enumerate() {
                if *v != 0.0 {
                    let x = g.point(k);
                    if x.iter().any(|c| c.abs() - 0.5 * g.h() > bound) {
                        return escape("grid density".into());
                    }
                }
            }
        }
        _ => {}
    }
    Ok(())
}
