use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("duplicate state `{0}`")]
    DuplicateState(String),

    #[error("permutation of state `{0}` is not a bijection of the alphabet")]
    NonBijective(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("declared inverse `{1}` of `{0}` does not invert it")]
    BadInverse(String, String),

    #[error("invalid word `{0}`: {1}")]
    InvalidWord(String, String),

    #[error("invalid ray `{0}`: {1}")]
    InvalidRay(String, String),

    #[error("section orbit did not close after {0} steps")]
    OrbitDidNotClose(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("trace undefined at this parameter: complementary block is singular")]
    SingularBlock,

    #[error("unsupported `{0}`: {1}")]
    Unsupported(String, String),

    #[error("unresolvable operator `{0}`")]
    UnresolvedOperator(String),

    #[error("expression `{0}`: {1}")]
    Expr(String, String),

    #[error("polynomial is not quadratic")]
    NotQuadratic,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
