use std::io;

use thiserror::Error;

/// Errors produced by the forward model, dataset, and training layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `V_s^2 cos^2(theta) >= g d`: no propagating gravity wave at this angle.
    #[error("no propagating wave: V_s^2 cos^2(theta) = {speed_sq:.6e} >= g d = {gd:.6e}")]
    NoPropagatingWave { speed_sq: f64, gd: f64 },

    /// A closed-form expression hit a removable or true singularity.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// Boundary-condition system is singular or too ill-conditioned to trust.
    #[error("degenerate boundary system (condition number {cond:.3e})")]
    DegenerateBoundary { cond: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    /// File header or body does not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    /// Training produced a non-finite loss.
    #[error("training diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors that originate in the physics layers rather than IO or
    /// configuration.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::NoPropagatingWave { .. } | Error::Singular(_) | Error::DegenerateBoundary { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
