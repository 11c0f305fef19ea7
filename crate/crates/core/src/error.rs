use thiserror::Error;

/// Errors raised by model construction, encodings and observable estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or out-of-range model parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A dense representation would exceed the configured cap.
    #[error("size error: {0}")]
    Size(String),

    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested tolerance is below what f64 arithmetic can certify.
    #[error("precision error: {0}")]
    Precision(String),

    /// A matrix handed to a polynomial transform is not a contraction.
    #[error("scaling error: {0}")]
    Scaling(String),

    /// A caller violated an operation's contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A text input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
