use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty geometry")]
    EmptyGeometry,
    #[error("no bones")]
    NoBones,
    #[error("degenerate interior")]
    DegenerateInterior,
    #[error("degenerate labeling")]
    DegenerateLabeling,
    #[error("no joint evidence")]
    NoJointEvidence,
    #[error("mismatched grid lattice")]
    GridMismatch,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn stage(stage: &str, source: Error) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(source),
        }
    }

    /// Process exit code: 2 for validation/input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_)
            | Error::DegenerateInterior
            | Error::NoJointEvidence
            | Error::DegenerateLabeling => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
