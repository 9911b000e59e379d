use thiserror::Error;

/// Errors raised by the analytical model, the solvers and the scenario builders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for {what}: {detail}")]
    Validation { what: &'static str, detail: String },

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("fairness index is undefined when every throughput is zero")]
    UndefinedFairness,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Validation {
        what,
        detail: detail.into(),
    }
}
