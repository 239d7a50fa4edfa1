use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} out of range (max {max})")]
    DimensionOutOfRange { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration has {got} values, dimension {dim} needs {expected}")]
    BadConfigLength { dim: usize, expected: usize, got: usize },

    #[error("coordinate index {index} out of range for arity {arity}")]
    CoordinateOutOfRange { index: usize, arity: usize },

    #[error("cubes are not glueable: max vertex discrepancy {max_dev:.3e} exceeds {tol:.3e}")]
    NotGlueable { max_dev: f64, tol: f64 },

    #[error("vertex set is not downward-closed")]
    NotDownwardClosed,

    #[error("operation requires an abelian group")]
    NonAbelian,

    #[error("alternating sum is nonzero; not a theta-kernel element")]
    ThetaNonzero,

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("element is not a member of the ambient group")]
    NotAMember,

    #[error("cocycle identity check failed: max deviation {0:.3e}")]
    CocycleCheck(f64),

    #[error("operation not supported for this system: {0}")]
    UnsupportedSystem(String),

    #[error("corner face {index} is not a cube")]
    CornerFaceNotCube { index: usize },

    #[error("no completion exists for the corner")]
    NoCompletion,

    #[error("fiber of the extraction is not constant: deviation {0:.3e}")]
    FiberNotConstant(f64),

    #[error("table lookup missed for the given cube")]
    TableMiss,

    #[error("non-real inner average: imaginary part {0:.3e}")]
    NonRealAverage(f64),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
