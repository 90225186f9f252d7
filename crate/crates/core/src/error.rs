use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("brute-force evaluation refuses {machines} machines (limit {limit})")]
    BruteForceTooLarge { machines: usize, limit: usize },

    /// `1 - fail - sqrt(l / m)` is not positive, so the Chernoff argument
    /// gives no homogeneous allocation on this many machines.
    #[error(
        "Chernoff bound unusable on {machines} machines; at least {min_machines} machines required"
    )]
    ChernoffInfeasible { machines: usize, min_machines: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid search bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for both kinds of infeasibility (plain and Chernoff).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::ChernoffInfeasible { .. })
    }
}
