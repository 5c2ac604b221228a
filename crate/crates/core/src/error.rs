use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no quadrature rule with exactness {requested} (maximum {max})")]
    UnsupportedExactness { requested: u32, max: u32 },
    #[error("degree constraint violated: {0}")]
    InvalidDegrees(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point ({x}, {y}) lies outside element {element}")]
    PointOutsideElement { element: usize, x: f64, y: f64 },
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("boundary condition violated: {0}")]
    BoundaryCondition(String),
    #[error("instability: non-finite coefficients at t = {time}")]
    Unstable { time: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
