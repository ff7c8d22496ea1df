use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by the exit-code family the CLI maps them to:
/// configuration, data, and numerical problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("ingestion error at row {row}, column `{column}`: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length error: need at least {required} observations, got {actual}")]
    Length { required: usize, actual: usize },

    #[error("specification error: {0}")]
    Spec(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("design matrix is rank deficient: column `{column}` is (near) linearly dependent on earlier columns")]
    Singular { column: String },

    #[error("regressor `{column}` is constant within every entity and is annihilated by the within transform")]
    Annihilated { column: String },

    #[error("random-effects components are infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("stage `{stage}` failed ({context}): {source}")]
    Stage {
        stage: &'static str,
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Usage(_) => ErrorClass::Config,
            Error::Ingest { .. } | Error::Io(_) | Error::Spec(_) => ErrorClass::Data,
            Error::Domain(_)
            | Error::Length { .. }
            | Error::Singular { .. }
            | Error::Annihilated { .. }
            | Error::Infeasible(_)
            | Error::Degenerate(_) => ErrorClass::Numerical,
            Error::Stage { source, .. } => source.class(),
        }
    }

    /// Wraps `self` with the pipeline stage and entity/variable it came from.
    pub fn in_stage(self, stage: &'static str, context: impl Into<String>) -> Error {
        Error::Stage {
            stage,
            context: context.into(),
            source: Box::new(self),
        }
    }
}
