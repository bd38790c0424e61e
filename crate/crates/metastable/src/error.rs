use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// The categories matter to the CLI: input and domain errors are the
/// caller's fault, contract errors mean a supplied function broke its
/// promised shape (monotonicity, refinement), and budget errors mean a
/// computation was cut off rather than answered.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("index arithmetic overflowed while {0}")]
    Overflow(String),

    #[error("index budget of {budget} exhausted while {context}")]
    Budget { budget: u64, context: String },

    #[error("bracket does not straddle the target: {0}")]
    Bracket(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
