use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid contract: {0}")]
    InvalidContract(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Riccati solution for factor {factor} explodes at t = {time}")]
    RiccatiExplosion { factor: usize, time: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("moment generating function is not finite at R = {r}")]
    StripViolation { r: f64 },

    #[error("quadrature did not converge: last change {change:e} with {n_points} nodes")]
    QuadratureNotConverged { n_points: usize, change: f64 },

    #[error("ODE solver did not reach tolerance within {max_steps} steps")]
    SolverNotConverged { max_steps: usize },

    #[error("calibration did not converge: {0}")]
    NotConverged(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical routine (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RiccatiExplosion { .. }
                | Error::NonFinite(_)
                | Error::StripViolation { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::SolverNotConverged { .. }
                | Error::NotConverged(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
