use thiserror::Error;

use crate::dataset::RiskCategory;

/// Coarse classification used by the command-line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Fit,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema: {0}")]
    Schema(String),

    #[error("drug `{drug}` is labelled both {first} and {second}")]
    ConflictingLabel {
        drug: String,
        first: RiskCategory,
        second: RiskCategory,
    },

    #[error("column `{0}` has no observed values")]
    ColumnAllMissing(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown learner `{0}`")]
    UnknownLearner(String),

    #[error("unknown drug `{0}`")]
    UnknownDrug(String),

    #[error("dataset contains missing values; impute before fitting")]
    MissingValues,

    #[error("training data is empty")]
    EmptyTraining,

    #[error("training labels for {0} contain a single class")]
    SingleClass(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("removing drugs leaves no {0} drugs")]
    EmptyCategory(RiskCategory),

    #[error("fold {fold} (held-out drug `{drug}`): {source}")]
    Fold {
        fold: usize,
        drug: String,
        #[source]
        source: Box<Error>,
    },

    #[error("bootstrap replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_)
            | Error::Parse { .. }
            | Error::Schema(_)
            | Error::ConflictingLabel { .. }
            | Error::ColumnAllMissing(_) => ErrorKind::Data,
            Error::InvalidArgument(_) | Error::UnknownLearner(_) | Error::UnknownDrug(_) => {
                ErrorKind::Config
            }
            Error::MissingValues
            | Error::EmptyTraining
            | Error::SingleClass(_)
            | Error::NonFinite(_)
            | Error::EmptyCategory(_) => ErrorKind::Fit,
            Error::Fold { source, .. } | Error::Replicate { source, .. } => match source.kind() {
                ErrorKind::Config => ErrorKind::Config,
                _ => ErrorKind::Fit,
            },
        }
    }

    /// True when the root cause is a degenerate single-class binarization.
    pub fn is_single_class(&self) -> bool {
        match self {
            Error::SingleClass(_) => true,
            Error::Fold { source, .. } | Error::Replicate { source, .. } => {
                source.is_single_class()
            }
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
