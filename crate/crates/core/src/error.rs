use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver error: {message} (condition estimate {condition:.3e})")]
    Solver { message: String, condition: f64 },

    #[error("search failure: {0}")]
    SearchFailure(String),

    #[error("wellposedness violation: {0}")]
    WellposednessViolation(String),

    #[error("oracle error: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {value} must lie in (0, 1)")))
    }
}

pub(crate) fn check_closed_unit(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {value} must lie in [0, 1]")))
    }
}
