//! Simulation, analysis, and learning workbench for uplink massive MIMO
//! channel estimation with 1-bit ADC receivers.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`channel`] — geometric multipath channels over a uniform linear array,
//!   synthetic user-grid scenarios, and ingestion of external channel sets.
//! - [`pilot`] — pilot sequences with even phase sampling of `(0, π/2]`, the
//!   mapping-existence angle `α`, minimum pilot lengths, and exhaustive
//!   pairwise distinguishability reports.
//! - [`quantize`] — the 1-bit quantized uplink front end, including complex
//!   Gaussian noise at controlled SNR.
//! - [`estimator`] — a dense-network channel estimator (NMSE loss, ADAM)
//!   plus a nearest-neighbor baseline over stored quantized signatures.
//! - [`evaluation`] — NMSE and per-antenna SNR metrics and the
//!   `(M, N, SNR)` sweep driver.
//! - [`dataset`] — binary dataset containers with JSON manifests.

pub mod channel;
pub mod dataset;
pub mod estimator;
pub mod evaluation;
pub mod pilot;
pub mod quantize;
pub mod seed;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's domain (range, dimension, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration cannot be realized (infeasible grid, bad fractions, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A dataset or checkpoint file violates its format contract.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// An operation was invoked on a model in the wrong state.
    #[error("state error: {0}")]
    State(String),

    /// Training aborted, usually on a non-finite loss.
    #[error("training aborted at epoch {epoch}, batch {batch}: {message}")]
    Training {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: msg.into(),
        }
    }
}
