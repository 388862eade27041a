use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unknown gene `{gene}` ({context})")]
    UnknownGene { gene: String, context: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model document: {0}")]
    Model(#[from] serde_json::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn unknown_gene(gene: impl Into<String>, context: impl Into<String>) -> Self {
        Error::UnknownGene {
            gene: gene.into(),
            context: context.into(),
        }
    }
}
