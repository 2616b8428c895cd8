use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse architecture string {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("time budget violated: {detail} = {got}, expected {expected}")]
    Budget {
        detail: String,
        got: usize,
        expected: usize,
    },

    #[error("{factor} does not divide {what}")]
    Divisibility { factor: usize, what: String },

    #[error("NOLA condition violated: squared-window envelope minimum {min_envelope:e}")]
    Nola { min_envelope: f64 },

    #[error("non-finite activation after layer {layer}")]
    NonFinite { layer: String },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unknown tensor: {0}")]
    UnknownTensor(String),

    #[error("missing tensor: {0}")]
    MissingTensor(String),

    #[error("duplicate tensor: {0}")]
    DuplicateTensor(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}
