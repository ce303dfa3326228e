use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("mesh too coarse: {0}")]
    TooCoarse(usize),
    #[error("triangle references a missing vertex")]
    InvalidIndex,
    #[error("degenerate mesh: {0}")]
    Degenerate(&'static str),
    #[error("non-manifold mesh: {0}")]
    NonManifold(&'static str),
    #[error("periodic boundary: {0}")]
    Unpaired(&'static str),
    #[error("displacement {value} at dof {dof} violates |u| < {bound}")]
    Guard { dof: usize, value: f64, bound: f64 },
    #[error("field has length {got}, expected {expected}")]
    FieldLength { got: usize, expected: usize },
    #[error("adaptation rolled back: {0}")]
    RolledBack(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for SurfaceError {
    fn from(e: std::io::Error) -> Self {
        SurfaceError::Io(e.to_string())
    }
}
