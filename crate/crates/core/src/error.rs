use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("wave number must be positive, got k = {0}")]
    NonPositiveWaveNumber(f64),

    #[error("transfer matrix is numerically singular at k = {k} (|M22| = {m22})")]
    SingularTransfer { k: f64, m22: f64 },

    #[error(
        "adaptive quadrature did not reach rel_tol = {rel_tol:e} within depth {max_depth} \
         (worst relative error {achieved:e})"
    )]
    QuadratureNotConverged {
        rel_tol: f64,
        max_depth: u32,
        achieved: f64,
    },

    #[error("asymptotic condition unmet: {mass_inside:e} of the norm is still inside the clock window at t = {time}")]
    AsymptoticConditionUnmet { mass_inside: f64, time: f64 },

    #[error("wave packet reached the grid boundary (edge density {density:e} at t = {time})")]
    BoundaryReached { density: f64, time: f64 },

    #[error("{0}")]
    InvalidSweep(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}
