use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A code specification violates one of its structural preconditions.
    #[error("invalid code spec: {0}")]
    InvalidSpec(String),

    /// Requested window size is outside `1..=L`.
    #[error("window size {w} out of range 1..={l}")]
    WindowOutOfRange { w: usize, l: usize },

    /// A frame, file, or configuration does not match the loaded code.
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// An operation that needs at least one element got none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A decoder state query touched a spatial position that no window has
    /// activated yet.
    #[error("position {0} has not been activated by any window")]
    NotActivated(usize),

    /// Manipulation must reduce the SNR (additive noise only).
    #[error("manipulated SNR {manip_db} dB must be below the nominal {nominal_db} dB")]
    ManipSnrNotBelowNominal { manip_db: f64, nominal_db: f64 },

    /// Invalid decoder configuration.
    #[error("invalid decoder config: {0}")]
    InvalidConfig(String),

    /// Test-set creation gave up before reaching the requested stall count.
    #[error("stall rate too low: {collected} stalls in {attempts} frames at {snr_db} dB")]
    StallRateTooLow {
        collected: usize,
        attempts: usize,
        snr_db: f64,
    },

    /// A test-set file failed structural validation.
    #[error("bad test-set file: {0}")]
    BadTestset(String),

    /// An alist file failed to parse.
    #[error("bad alist file: {0}")]
    BadAlist(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
