use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("energy quadrature is not finite")]
    NonFiniteEnergy,

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("region contains no grid cells: {0}")]
    EmptyRegion(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solution is not converged (residual {0:.3e})")]
    NotConverged(f64),

    #[error("interpolation point outside the sampled box")]
    InterpolationOutOfRange,

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("winding mismatch: subcell {index} has degree {degree}")]
    WindingMismatch { index: usize, degree: i32 },

    #[error("grid cannot resolve the construction: {0}")]
    ResolutionError(String),

    #[error("degenerate modulus on {0} plaquettes")]
    DegenerateModulus(usize),

    #[error("no square of the lattice fits inside the audit region")]
    EmptyAudit,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 configuration, 3 regime or geometry, 4
    /// convergence or numerics, 5 input/output.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::GridMismatch => 2,
            Error::RegimeViolation(_)
            | Error::ResolutionError(_)
            | Error::EmptyRegion(_)
            | Error::EmptyAudit
            | Error::InterpolationOutOfRange => 3,
            Error::NoConvergence { .. }
            | Error::NotConverged(_)
            | Error::NonFiniteEnergy
            | Error::SingularSystem(_)
            | Error::WindingMismatch { .. }
            | Error::DegenerateModulus(_) => 4,
            Error::Io(_) | Error::Csv(_) | Error::MissingInput(_) => 5,
        }
    }
}
