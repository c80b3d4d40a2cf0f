use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A coincidence coefficient outside (0, 100].
    #[error("coincidence {value} for pair {pair} is outside (0, 100]")]
    CoincidenceOutOfRange { pair: String, value: f64 },

    /// A negative or non-finite swadesh distance.
    #[error("distance {value} for pair {pair} must be finite and non-negative")]
    InvalidDistance { pair: String, value: f64 },

    #[error("matrix is not symmetric at cells {0}")]
    Asymmetric(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("at least {required} languages are required, got {got}")]
    TooFewLanguages { required: usize, got: usize },

    #[error("duplicate language label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown language `{0}`")]
    UnknownLeaf(String),

    #[error("label sets differ; only on one side: {0}")]
    LabelMismatch(String),

    #[error("language `{language}` is missing slots: {slots}")]
    MissingSlots { language: String, slots: String },

    #[error("duplicate row for language `{language}` and slot `{slot}`")]
    DuplicateRow { language: String, slot: String },

    #[error("effective list is empty")]
    EmptyList,

    /// Excluding `n3` borrowed slots pushes a coefficient above 100.
    #[error("borrowing adjustment gives coincidence {value} > 100 for pair {pair}; N3 is inconsistent with this pair")]
    InconsistentBorrowings { pair: String, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} did not converge after {1} iterations")]
    NoConvergence(&'static str, usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-range input, as opposed
    /// to failures during computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NoConvergence(..))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
