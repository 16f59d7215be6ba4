use thiserror::Error;

/// Library-wide error type.
///
/// Variants map one-to-one onto the failure modes of the public API:
/// configuration problems, domain violations (non-positive density,
/// non-solenoidal input), runtime blow-up, and mask invalidation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("velocity field is not solenoidal: relative divergence {rel:.3e} exceeds {tol:.3e}")]
    NonSolenoidal { rel: f64, tol: f64 },

    #[error("density must be strictly positive: min rho = {min:.6e}")]
    NonPositiveDensity { min: f64 },

    #[error("pseudo-velocity undefined: |q| < threshold everywhere (q is identically zero to tolerance)")]
    AllMasked,

    #[error("solution blew up at t = {time:.6e} (step {step}): non-finite values in state")]
    BlowUp { time: f64, step: u64 },

    #[error("marker {index} entered the masked region at t = {time:.6e}")]
    MarkerMasked { index: usize, time: f64 },

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("snapshot magic mismatch: expected \"GHBF1\", found {found:?}")]
    SnapshotMagic { found: Vec<u8> },

    #[error("snapshot truncated at byte offset {offset}: {message}")]
    SnapshotTruncated { offset: u64, message: String },

    #[error("snapshot malformed at byte offset {offset}: {message}")]
    SnapshotMalformed { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
