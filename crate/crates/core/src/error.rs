use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not reach relative tolerance {tolerance:e} (estimate {estimate}, error {error:e})")]
    QuadratureNonConvergence { estimate: f64, error: f64, tolerance: f64 },

    #[error("rejection sampler acceptance rate {rate:e} is below {min:e}")]
    LowAcceptance { rate: f64, min: f64 },

    #[error("{pairs} pairwise distances exceed the cap of {cap}")]
    PairCapExceeded { pairs: u64, cap: u64 },

    #[error("interval [{lo}, {hi}) crosses an integer boundary")]
    CrossesIntegerBoundary { lo: f64, hi: f64 },

    #[error("witness interval [{lo}, {hi}) for gap ({gap_lo}, {gap_hi}) contains a distance")]
    WitnessNotEmpty { lo: f64, hi: f64, gap_lo: f64, gap_hi: f64 },

    #[error("points from {a:?} and {b:?} are {distance} apart (minimum 1)")]
    CrossPartSeparation {
        a: crate::construction::Source,
        b: crate::construction::Source,
        distance: f64,
    },

    #[error("ground set of size {0} is too large for exhaustive enumeration (max 20)")]
    GroundSetTooLarge(usize),

    #[error("relative standard error {rel:.4} of {quantity} exceeds {max}")]
    StderrTooLarge { quantity: &'static str, rel: f64, max: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// True for failures that indicate a violated mathematical or geometric
    /// invariant rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::Invariant(_) | Error::CrossPartSeparation { .. } | Error::WitnessNotEmpty { .. }
        )
    }
}
