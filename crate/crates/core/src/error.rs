use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate knots: values {0} and {1} coincide")]
    DuplicateKnots(f64, f64),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("precision loss: error estimate {estimate:e} exceeds tolerance for result {value:e}")]
    PrecisionLoss { estimate: f64, value: f64 },

    #[error("order too high: requested {requested}, maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("quadrature did not converge: last change {change:e}")]
    QuadratureNotConverged { change: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
