use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dictionary column {column} has norm {norm} > 1")]
    InfeasibleDictionary { column: usize, norm: f64 },

    #[error("active set would exceed the cap of {cap} atoms (raise max_active)")]
    ActiveSetLimit { cap: usize },

    #[error("regularized Gram matrix is singular on the active set; use lambda2 > 0")]
    SingularGram,

    #[error("homotopy path did not terminate within {steps} breakpoints")]
    PathLimit { steps: usize },

    #[error("stale Cholesky factor: factor is {factor}x{factor} but the active set has {active} atoms")]
    StaleCholesky { factor: usize, active: usize },

    #[error("normal equations are singular; use nu > 0")]
    SingularNormalEquations,

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("model has no sensing/transform matrix")]
    MissingTransform,

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("image is {h}x{w}, smaller than the {side}x{side} patch")]
    ImageTooSmall { h: usize, w: usize, side: usize },

    #[error("pixel ({row}, {col}) is not covered by any patch")]
    Uncovered { row: usize, col: usize },

    #[error(
        "training diverged at iteration {iteration}: objective {objective} exceeds 1e3x the \
         initial {initial}; reduce the learning rate rho (currently {rho})"
    )]
    Diverged {
        iteration: usize,
        objective: f64,
        initial: f64,
        rho: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(context: &'static str, expected: impl core::fmt::Display, actual: impl core::fmt::Display) -> Error {
    use alloc::string::ToString;
    Error::Shape {
        context,
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
