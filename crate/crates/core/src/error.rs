use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or hyperparameters that do not fit the architecture.
    #[error("configuration error: {0}")]
    Config(String),

    /// A layer produced NaN or infinity.
    #[error("non-finite value produced by layer `{layer}`")]
    Numeric { layer: &'static str },

    /// An operation was called with inputs that violate its contract.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A model blob could not be decoded.
    #[error("model load error: {0}")]
    Load(String),

    /// A dataset file could not be parsed or validated.
    #[error("dataset error at line {line}: {reason}")]
    Dataset { line: usize, reason: String },

    /// The label source failed; no state was changed.
    #[error("oracle error: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
