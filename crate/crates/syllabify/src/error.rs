use thiserror::Error;

/// Errors produced by the syllabification engines and data plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed syllabification '{input}': {reason}")]
    MalformedSyllabification { input: String, reason: String },

    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unknown synthetic rule '{0}'")]
    RuleUnknown(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("duplicate word form '{0}' in dataset")]
    DuplicateWord(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("word '{word}' has {len} letters, exceeding the maximum of {max}")]
    WordTooLong {
        word: String,
        len: usize,
        max: usize,
    },

    #[error("attention received no unmasked phonetic positions")]
    DegenerateMask,

    #[error("word '{0}' lacks the phonetic channel required by the fusion model")]
    MissingPhonetic(String),

    #[error("frozen trunk parameters changed during fusion training (checksum mismatch)")]
    TrunkMutation,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
