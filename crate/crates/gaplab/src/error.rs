use thiserror::Error;

/// Errors shared by all modules of the laboratory.
#[derive(Debug, Error)]
pub enum GapError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires the {required} regime, parameters classify as {actual}")]
    WrongRegime { required: String, actual: String },

    #[error("condition not stated for model {model} in the critical regime")]
    NotStated { model: String },

    #[error("field does not provide a gradient")]
    MissingGradient,

    #[error("non-finite field value at {0}")]
    NonFiniteField(String),

    #[error("weight is not symmetric: a(y,z)={forward}, a(z,y)={backward}")]
    AsymmetricWeight { forward: f64, backward: f64 },

    #[error("energy diverges: {0}")]
    Divergent(String),

    #[error("boundary mismatch: |v - expected| = {mismatch} at {location}")]
    BoundaryMismatch { mismatch: f64, location: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GapError {
    /// Stable process exit code for the CLI; each variant maps to its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            GapError::InvalidParameter(_) => 3,
            GapError::Config { .. } => 4,
            GapError::ResourceLimit(_) => 5,
            GapError::Divergent(_) => 6,
            GapError::Io(_) => 7,
            GapError::SingularInput(_) => 8,
            GapError::DimensionMismatch { .. } => 9,
            GapError::WrongRegime { .. } => 10,
            GapError::NotStated { .. } => 11,
            GapError::MissingGradient => 12,
            GapError::NonFiniteField(_) => 13,
            GapError::AsymmetricWeight { .. } => 14,
            GapError::BoundaryMismatch { .. } => 15,
        }
    }
}

pub type Result<T> = std::result::Result<T, GapError>;
