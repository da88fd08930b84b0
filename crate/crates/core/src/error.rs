// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::state::Spin;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis index ({spin}, n={n}) is outside the truncated ladder (n_max={n_max})")]
    IndexOutOfRange { spin: Spin, n: usize, n_max: usize },

    #[error("state has no nonzero amplitude")]
    EmptyState,

    #[error("non-finite amplitude at ({spin}, n={n})")]
    NonFinite { spin: Spin, n: usize },

    #[error("duplicate entry for ({spin}, n={n})")]
    DuplicateEntry { spin: Spin, n: usize },

    #[error("laguerre order {0} exceeds the supported maximum of 64")]
    LaguerreOrder(usize),

    #[error("invalid coupling model: {0}")]
    InvalidModel(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("degenerate pair: both rates refer to the same transition")]
    DegeneratePair,

    #[error("no root of the rate ratio {target} for eta in (0, 2)")]
    NoRoot { target: f64 },

    #[error("reference pair rate is zero (delta_n={delta_n}, ref_pair={ref_pair})")]
    ZeroReferenceRate { delta_n: i32, ref_pair: usize },

    #[error("nothing to clear: both amplitudes are zero")]
    NothingToClear,

    #[error("clearing did not converge within {pulses} pulses")]
    NonConvergence { pulses: usize },

    #[error("{what} digest mismatch: expected {expected}, found {found}")]
    DigestMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("rank-deficient jacobian: {0}")]
    RankDeficient(String),

    #[error("population inversion is underdetermined; unconstrained cells: {0:?}")]
    Underdetermined(Vec<(Spin, usize)>),

    #[error("phase scan must have at least 8 points spanning 2π")]
    InsufficientPhaseCoverage,

    #[error("unphysical coherence |{coh}| > sqrt(rho11*rho22) = {bound}")]
    UnphysicalCoherence { coh: f64, bound: f64 },

    #[error("target is not a real two-term superposition")]
    NotTwoTerm,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Input and validation errors, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::IndexOutOfRange { .. }
                | Error::EmptyState
                | Error::NonFinite { .. }
                | Error::DuplicateEntry { .. }
                | Error::InvalidModel(_)
                | Error::InvalidPulse(_)
                | Error::DegeneratePair
                | Error::DigestMismatch { .. }
                | Error::InsufficientData(_)
                | Error::InsufficientPhaseCoverage
                | Error::NotTwoTerm
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
