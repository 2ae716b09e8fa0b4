use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("fracture {0} lies on a coarse grid line")]
    FractureOnGridLine(usize),
    #[error("projection path is discontinuous after fracture cell {0}")]
    PathDiscontinuity(usize),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error(
        "iterative solve stopped at relative residual {residual:e} after {iterations} iterations"
    )]
    NonConvergence { residual: f64, iterations: usize },
    #[error("local problem has a vanishing pressure gap")]
    ZeroPressureGap,
    #[error("mesh generation failed: {0}")]
    Mesh(String),
    #[error("pseudo steady state not reached within {0} steps")]
    NoPseudoSteadyState(usize),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
