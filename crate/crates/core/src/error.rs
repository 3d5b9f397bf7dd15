use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),

    #[error("unknown group \"{0}\"")]
    UnknownGroup(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("plaintext component {index} out of range: {value} not in [0, 255]")]
    PlaintextOutOfRange { index: usize, value: i64 },

    #[error("discrete log not found in [{lo}, {hi}]")]
    DlogNotFound { lo: i64, hi: i64 },

    /// A first-layer column decryption landed outside the dlog window,
    /// which signals a mis-sized bound or a corrupted ciphertext.
    #[error(
        "first-layer decryption failed at column {column}: inner product outside [{lo}, {hi}]"
    )]
    ColumnBound { column: usize, lo: i64, hi: i64 },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("weight matrix refused for issuance: {0}")]
    IssuanceRefused(String),

    #[error("training diverged: loss is not finite at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed frame: {0}")]
    Frame(String),

    #[error("envelope: {0}")]
    Envelope(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("pipeline: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
