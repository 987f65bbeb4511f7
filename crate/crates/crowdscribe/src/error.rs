use std::path::PathBuf;

use thiserror::Error;

/// Library-wide error type.
///
/// Variants split into two broad groups that the CLI maps onto exit codes:
/// input problems (`Io`, `Parse`) and contract violations (everything else).
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data; `line` is 1-based.
    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    /// A precondition of an operation was violated.
    #[error("{0}")]
    Contract(String),

    /// Simulation ran out of eligible workers before every item reached the
    /// configured overlap. Carries how far the run got.
    #[error(
        "worker pool exhausted: {completed_items} of {total_items} items complete, \
         {accepted_annotations} annotations accepted"
    )]
    PartialCompletion {
        completed_items: usize,
        total_items: usize,
        accepted_annotations: usize,
    },
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for errors caused by unreadable or malformed input files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
