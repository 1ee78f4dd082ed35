// SPDX-License-Identifier: MIT OR Apache-2.0
use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An invalid problem or surface description.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical error: {msg} (residual {residual:.3e})")]
    Numeric { msg: String, residual: f64 },
    /// The jet constraints cannot be met in the truncated basis.
    #[error("constraint error: {0}")]
    Constraint(String),
    /// A closed form is not applicable to the given data.
    #[error("formula error: {0}")]
    Formula(String),
    /// A valid request that this implementation does not handle.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Error {
    Error::Numeric { msg: msg.into(), residual }
}
