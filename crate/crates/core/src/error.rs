use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("inverted triangle {id} (signed area {area:e})")]
    InvertedTriangle { id: usize, area: f64 },

    #[error("mesh generation failed: {0}")]
    Generation(String),

    #[error("empty mesh")]
    EmptyMesh,

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("field length {got} does not match vertex count {expected}")]
    FieldLength { expected: usize, got: usize },

    #[error("non-positive coefficient {value} on triangle {triangle}")]
    NonPositiveCoefficient { triangle: usize, value: f64 },

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("acceptance probability {0:e} too small for rejection sampling")]
    TailTooFar(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("mesh invalidated at iteration {iteration}: {reason}")]
    MeshInvalidated { iteration: usize, reason: String },

    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
