use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no positive-definite solution: closed-loop matrix is not Hurwitz (max real part {0})")]
    NotHurwitz(f64),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("delay channel error: {0}")]
    Channel(String),
    #[error("time {t} outside signal coverage [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("predictor error: {0}")]
    Predictor(String),
    /// The state or the prediction left every reasonable bound.
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = core::result::Result<T, Error>;
