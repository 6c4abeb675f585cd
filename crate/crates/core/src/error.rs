use thiserror::Error;

/// Errors raised by the laboratory.
///
/// The harness maps [`Error::is_validation`] to exit code 2 and every other
/// numerical variant to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no closed form for theta = {theta}")]
    NoClosedForm { theta: f64 },

    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),

    #[error("divergent moment: exponent {a} >= theta {theta}")]
    DivergentMoment { a: f64, theta: f64 },

    #[error(
        "quadrature did not converge on panel [{a:e}, {b:e}] (estimate {estimate:e}, error {error:e})"
    )]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("aliasing: semigroup output reached {min_value:e} below the positivity slack")]
    Aliasing { min_value: f64 },

    #[error("atomic datum has no t=0 trace on grid")]
    AtomicTrace,

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("node mismatch: no solver node at t = {0}")]
    NodeMismatch(f64),

    #[error("scan failed: {0}")]
    Scan(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Domain(_)
                | Error::NoClosedForm { .. }
                | Error::BoundNotApplicable(_)
                | Error::DivergentMoment { .. }
                | Error::AtomicTrace
                | Error::Undefined(_)
                | Error::Hypothesis(_)
                | Error::NodeMismatch(_)
                | Error::Config { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
