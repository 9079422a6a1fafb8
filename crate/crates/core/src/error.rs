use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for length {n} on axis {axis}")]
    IndexOutOfRange { index: u64, n: u64, axis: usize },

    #[error("index has {got} components, signal dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("signal shape mismatch: expected n={expected_n}, d={expected_d}; got n={n}, d={d}")]
    ShapeMismatch {
        expected_n: u64,
        expected_d: usize,
        n: u64,
        d: usize,
    },

    #[error("duplicate frequency {0:?} in sparse representation")]
    DuplicateFrequency(Vec<u64>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("permutation has no inverse modulo {n} (gcd({sigma}, {n}) > 1)")]
    NotInvertible { sigma: u64, n: u64 },

    #[error("{points} points exceed the dense transform cap of {cap}")]
    CapExceeded { points: u64, cap: u64 },

    #[error("malformed dense dump: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
