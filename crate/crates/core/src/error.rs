//! Error taxonomy shared across the workspace.

/// Crate-wide error type.
///
/// `Divergence` carries the first offending time and `GainOverflow` the
/// offending gain argument, so a failure can be reported at the point it
/// went bad.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Structurally invalid input: wrong dimension, empty matrix, event
    /// outside the horizon, non-Hurwitz filter coefficients, ...
    #[error("domain error: {0}")]
    Domain(String),

    /// A state, derivative, or matrix entry became non-finite, or the state
    /// norm crossed the divergence guard.
    #[error("divergence at t={t}: {what}")]
    Divergence { t: f64, what: String },

    /// A Nussbaum gain evaluation exceeded its overflow cap. `at` is the
    /// gain argument ζ; runs translate this into a time-stamped verdict.
    #[error("gain overflow at zeta={at}: |value| {value:.3e} exceeds cap {cap:.3e}")]
    GainOverflow { at: f64, value: f64, cap: f64 },

    /// Scenario/configuration rejection (unknown key, missing field,
    /// inconsistent parameter combination).
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn divergence(t: f64, what: impl Into<String>) -> Self {
        Error::Divergence { t, what: what.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
