use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad scenario file or arguments.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] fracflow_core::Error),
    #[error("reference has {reference} unknowns, fewer than 50x the {coarse} coarse unknowns")]
    MeshTooCoarse { reference: usize, coarse: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid input, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        use fracflow_core::Error as E;
        match self {
            HarnessError::Validation(_) | HarnessError::MeshTooCoarse { .. } => 2,
            HarnessError::Core(
                E::Invalid(_) | E::FractureOnGridLine(_) | E::Unsupported(_),
            ) => 2,
            HarnessError::Core(_) | HarnessError::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
