use thiserror::Error;

/// Errors produced while parsing, analysing or simulating a diffusion spec.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("expression error in `{source_text}`: {message}")]
    Expr { source_text: String, message: String },

    #[error("overlapping pieces: {0}")]
    Overlap(String),

    #[error("coverage gap: {0}")]
    CoverageGap(String),

    #[error("invalid piece: {0}")]
    InvalidPiece(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("scale function is not monotone: {0}")]
    NotMonotone(String),

    #[error("undetermined boundary behaviour at {endpoint}: {hint}")]
    Undetermined { endpoint: String, hint: String },

    #[error("not symmetrizable: {0}")]
    NotSymmetrizable(String),

    #[error("membership violation: {0}")]
    Membership(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown example `{0}`")]
    UnknownExample(String),
}

impl Error {
    /// True for errors caused by an undecidable numerical verdict.
    pub fn is_undetermined(&self) -> bool {
        matches!(self, Error::Undetermined { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
