//! Fractional heat kernel `G(x, t)` for `(-Delta)^{theta/2}`.
//!
//! The unit-time radial profile `G(r, 1)` is tabulated once per
//! `(N, theta)`; all other times follow from the scaling
//! `G(x, t) = t^{-N/theta} G(t^{-1/theta} x, 1)`.

mod inversion;
mod table;

pub use inversion::{MAX_REFINEMENTS, PANEL_TOL};
pub use table::{
    check_two_sided_bound, kernel_at, kernel_moment, kernel_moment_direct, shifted_moment,
    synthesize_kernel, KernelTable, TwoSidedBand, DEFAULT_POINTS,
};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, LazyLock, Mutex};

use crate::error::{Error, Result};

/// Spatial dimension and order of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dim: usize,
    pub theta: f64,
}

impl KernelSpec {
    pub fn new(dim: usize, theta: f64) -> Result<Self> {
        let spec = Self { dim, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 2.0) {
            return Err(Error::Invalid(format!(
                "theta = {} outside (0, 2]",
                self.theta
            )));
        }
        Ok(())
    }

    /// Surface area of the unit sphere `S^{N-1}`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.dim)
    }

    /// Default outer radius of a synthesized table.
    pub fn default_r_max(&self) -> f64 {
        if self.theta >= 2.0 {
            40.0
        } else {
            2000.0
        }
    }

    /// `G(0, 1)`, known for every order.
    pub fn value_at_origin(&self) -> f64 {
        let n = self.dim as f64;
        sphere_area(self.dim) * gamma(n / self.theta) / (self.theta * (2.0 * PI).powf(n))
    }
}

pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / gamma(n / 2.0)
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

type TableCache = Mutex<HashMap<(usize, u64), Arc<KernelTable>>>;

static TABLES: LazyLock<TableCache> = LazyLock::new(|| Mutex::new(HashMap::new()));

/// Default-resolution table for `spec`, synthesized once per process.
pub fn shared_table(spec: &KernelSpec) -> Result<Arc<KernelTable>> {
    spec.validate()?;
    let key = (spec.dim, spec.theta.to_bits());
    if let Some(t) = TABLES.lock().expect("kernel cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    // built outside the lock; a racing duplicate is identical
    let table = Arc::new(synthesize_kernel(
        spec,
        spec.default_r_max(),
        DEFAULT_POINTS,
    )?);
    let mut cache = TABLES.lock().expect("kernel cache poisoned");
    Ok(cache.entry(key).or_insert(table).clone())
}

/// `G(x, t)` for the two orders with elementary closed forms.
pub fn eval_closed_form(spec: &KernelSpec, x: &[f64], t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    let n = spec.dim as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if spec.theta == 2.0 {
        Ok((4.0 * PI * t).powf(-n / 2.0) * (-r2 / (4.0 * t)).exp())
    } else if spec.theta == 1.0 {
        let c = gamma((n + 1.0) / 2.0) / PI.powf((n + 1.0) / 2.0);
        Ok(c * t / (t * t + r2).powf((n + 1.0) / 2.0))
    } else {
        Err(Error::NoClosedForm { theta: spec.theta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_examples() {
        let g = KernelSpec::new(1, 2.0).unwrap();
        assert_relative_eq!(
            eval_closed_form(&g, &[0.0], 1.0).unwrap(),
            0.2820948,
            epsilon = 1e-7
        );
        let c = KernelSpec::new(1, 1.0).unwrap();
        assert_relative_eq!(
            eval_closed_form(&c, &[0.0], 1.0).unwrap(),
            1.0 / PI,
            max_relative = 1e-14
        );
        let c2 = KernelSpec::new(2, 1.0).unwrap();
        assert_relative_eq!(
            eval_closed_form(&c2, &[0.0, 0.0], 1.0).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            eval_closed_form(&g, &[2.0], 4.0).unwrap(),
            (16.0 * PI).powf(-0.5) * (-0.25f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn closed_form_errors() {
        let s = KernelSpec::new(1, 1.5).unwrap();
        assert!(matches!(
            eval_closed_form(&s, &[0.0], 1.0),
            Err(Error::NoClosedForm { .. })
        ));
        let g = KernelSpec::new(1, 2.0).unwrap();
        assert!(matches!(
            eval_closed_form(&g, &[0.0], 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            eval_closed_form(&g, &[0.0], -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spec_invariants() {
        assert!(KernelSpec::new(0, 1.0).is_err());
        assert!(KernelSpec::new(1, 0.0).is_err());
        assert!(KernelSpec::new(1, 2.1).is_err());
        assert!(KernelSpec::new(1, f64::NAN).is_err());
        assert!(KernelSpec::new(3, 2.0).is_ok());
    }

    #[test]
    fn origin_value_matches_closed_forms() {
        for dim in 1..=3 {
            for theta in [1.0, 2.0] {
                let s = KernelSpec::new(dim, theta).unwrap();
                let exact = eval_closed_form(&s, &vec![0.0; dim], 1.0).unwrap();
                assert_relative_eq!(s.value_at_origin(), exact, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }
}
