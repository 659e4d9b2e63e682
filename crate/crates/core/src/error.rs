use thiserror::Error;

/// Failure modes shared by all modules.
///
/// `Validation` and `Domain` are caller errors, `Numeric` means a numerical
/// routine (quadrature, induction, enumeration) could not deliver a trusted
/// answer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
