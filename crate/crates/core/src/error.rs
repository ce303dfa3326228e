use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("mode ({m},{n}) is excluded")]
    InvalidMode { m: i32, n: i32 },
    #[error("pole of the {what} at {at}")]
    Pole { what: &'static str, at: f64 },
    #[error("vanishing denominator {expr} = {value:e}")]
    Denominator { expr: &'static str, value: f64 },
    #[error("degenerate amplitude equation: {0}")]
    Degenerate(&'static str),
    #[error("amplitude blew up at T = {time}")]
    BlowUp { time: f64 },
    #[error("invalid integration controls: {0}")]
    Controls(&'static str),
}
