use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Data that violates a type invariant (shape, grid, finiteness).
    #[error("{0}")]
    InvalidData(String),

    /// Caller-side precondition failure (bad arguments, incompatible stacking).
    #[error("{0}")]
    Precondition(String),

    #[error("{msg} (condition estimate {condition:.3e})")]
    Numerical { msg: String, condition: f64 },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("order {order}: {source}")]
    AtOrder {
        order: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, condition: f64) -> Self {
        Error::Numerical {
            msg: msg.into(),
            condition,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_order(self, order: usize) -> Self {
        Error::AtOrder {
            order,
            source: Box::new(self),
        }
    }

    /// Innermost error, with iteration/order annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } | Error::AtOrder { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 1 I/O or parse failure, 2 precondition violation,
    /// 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io { .. } | Error::Parse { .. } | Error::InvalidData(_) => 1,
            Error::Precondition(_) => 2,
            Error::Numerical { .. } => 3,
            Error::AtIteration { .. } | Error::AtOrder { .. } => unreachable!(),
        }
    }
}
