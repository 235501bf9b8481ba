use thiserror::Error;

/// Errors produced anywhere in the codec, simulator, and decoder.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HiqError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("layer mismatch: {0}")]
    LayerMismatch(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("payload of {requested} bytes exceeds capacity of {max} bytes")]
    CapacityExceeded { requested: usize, max: usize },

    #[error("block {block_id} of layer {layer_id} could not be corrected")]
    BlockDecodeFailure { layer_id: usize, block_id: usize },

    #[error("format information unreadable: {0}")]
    FormatUnreadable(String),

    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("frame rejected: {0}")]
    FrameRejected(String),

    #[error("invalid white reference: {0}")]
    InvalidWhite(String),

    #[error("white estimation failed: only {valid} usable samples")]
    WhiteEstimationFailure { valid: usize },

    #[error("insufficient training data: {0}")]
    InsufficientData(String),

    #[error("finder patterns not found: {0}")]
    NotFound(String),

    #[error("metrics undefined: {0}")]
    UndefinedMetrics(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HiqError {
    fn from(e: std::io::Error) -> Self {
        HiqError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HiqError>;
