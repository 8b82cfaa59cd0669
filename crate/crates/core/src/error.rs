use std::io;

use thiserror::Error;

/// Errors raised by the library.
///
/// Configuration problems are separated from runtime failures so that
/// callers (notably the CLI) can map them to distinct exit statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("Haar index out of range: j={j}, k={k} (need 0 <= k < 2^j)")]
    InvalidIndex { j: u32, k: u64 },

    #[error("family {name} returned H_{j}({t}) = {value}, outside [{lo}, {hi}]")]
    FamilyRange {
        name: String,
        j: u32,
        t: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("family {0} has no closed-form limit function")]
    NoLimit(String),

    #[error("point {numer}/{denom} is not on the sampling grid: {reason}")]
    OffGrid {
        numer: u64,
        denom: u64,
        reason: String,
    },

    #[error("no increments of resolution {resolution} fall in [{start}, {end}]; resolution too small for the partition")]
    EmptyInterval {
        resolution: usize,
        start: f64,
        end: f64,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("simulation cost {cost} exceeds the configured cap {cap}")]
    Budget { cost: u128, cap: u128 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's parameters rather than by the
    /// environment or the computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. }
                | Error::InvalidIndex { .. }
                | Error::FamilyRange { .. }
                | Error::NoLimit(_)
                | Error::EmptyInterval { .. }
                | Error::LengthMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
