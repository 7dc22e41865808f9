use thiserror::Error;

/// Errors raised by the numerical routines and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for {len} points")]
    IndexError { index: usize, len: usize },

    #[error("requested truncation order {alpha} exceeds matrix rank {rank}")]
    RankExceeded { alpha: usize, rank: usize },

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("empty neighborhood around point {center}")]
    EmptyNeighborhood { center: usize },

    #[error("points {i} and {j} coincide; distance estimate undefined")]
    DegenerateDistance { i: usize, j: usize },

    #[error("barycentric weights are singular at point {center} (denominator {denominator:.3e})")]
    SingularWeights { center: usize, denominator: f64 },

    #[error("point {0} has no neighbors at the requested scale")]
    IsolatedPoint(usize),

    #[error("malformed CSV at line {line}: {message}")]
    FormatError { line: usize, message: String },

    #[error("cannot parse CSV cell at line {line}, column {column}")]
    ParseError { line: usize, column: usize },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("at point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, index: usize) -> Error {
        match self {
            e @ Error::AtPoint { .. } => e,
            other => Error::AtPoint {
                index,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, with any point annotation removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
