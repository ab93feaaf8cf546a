use thiserror::Error;

/// Errors produced by the models and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// An exponent argument left the representable range. `positive` carries
    /// the sign of the offending argument.
    #[error("exponential saturation (argument {argument:.3e}, positive = {positive})")]
    Saturation { argument: f64, positive: bool },

    #[error("solver failed: {what} ({detail})")]
    Solver { what: &'static str, detail: String },

    #[error("model {model} cannot be evaluated for N = {junctions}")]
    ModelMismatch { model: &'static str, junctions: usize },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("transient integration failed at t = {time:.6e} s: {detail}")]
    Integrator { time: f64, detail: String },

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn solver_err(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Solver {
        what,
        detail: detail.into(),
    }
}
