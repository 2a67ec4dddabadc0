use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("schedule overflow: {0}")]
    ScheduleOverflow(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("calibration failed (best residual {residual:.3e}): {message}")]
    CalibrationFailure { residual: f64, message: String },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("construction failed: {0}")]
    ConstructionFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
