//! `atl` — command-line front end for the adaptive fault-tolerant
//! tracking laboratory in `atl-core`.
//!
//! Four subcommands:
//! - `run`      — integrate a scenario file and write a run bundle
//!                (`trace.csv`, `metrics.txt`, optional `certificate.txt`
//!                and `probe.txt`, plus a `scenario.echo` that reproduces
//!                the run byte-for-byte);
//! - `certify`  — decide uniform definiteness of the controllability
//!                surrogate over a state box or along a trace;
//! - `probe-nussbaum` — classify a gain function's sign-swing behaviour;
//! - `batch`    — run every `.cfg` in a directory in parallel and print
//!                an aggregate table.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure
//! (divergence, gain overflow, failed assertion), 3 certification or
//! probe verdict against the queried property.

pub mod bundle;
pub mod commands;
pub mod config;

/// A failure carrying its process exit code.
///
/// Code 1 is for configuration problems (bad file, unknown key, invalid
/// value, missing section), 2 for runtime failures (divergence, gain
/// overflow, failed output assertion), 3 for negative verdicts from
/// `certify` and `probe-nussbaum`.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn run(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn violated(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for Failure {}

impl From<atl_core::Error> for Failure {
    fn from(e: atl_core::Error) -> Self {
        match e {
            atl_core::Error::Divergence { .. } | atl_core::Error::GainOverflow { .. } => {
                Failure::run(e.to_string())
            }
            _ => Failure::config(e.to_string()),
        }
    }
}
