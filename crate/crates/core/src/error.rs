use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation error: {what} leaked {leaked:.3e} (tolerance {tolerance:.1e})")]
    Truncation {
        what: &'static str,
        leaked: f64,
        tolerance: f64,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("herald probability {0:.3e} is too small to condition on")]
    ZeroProbabilityHerald(f64),

    #[error("only {count} two-photon events; amplitude calibration needs at least {required}")]
    InsufficientTwoPhotonEvents { count: u64, required: u64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}
