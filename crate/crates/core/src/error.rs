use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("derivative order {0} is not supported (expected 1, 2 or 4)")]
    InvalidOrder(u32),

    #[error("states live on different grids or models")]
    GridMismatch,

    #[error("field contains non-finite samples")]
    NonFinite,

    #[error("nonlinearity evaluated at negative argument {0}")]
    NegativeArgument(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("charge {charge:e} is below the guard {threshold:e}")]
    NearZeroCharge { charge: f64, threshold: f64 },

    #[error("exponent p = {p} is not below the critical value {critical}")]
    Supercritical { p: f64, critical: f64 },

    #[error("probe family does not fit in the box: {0}")]
    ProbeOutOfGrid(String),

    #[error("minimization failed: {0}")]
    Minimization(String),

    #[error("charge restoration failed: current charge {0:e}")]
    ChargeRestoration(f64),

    #[error("malformed field file: {0}")]
    FieldFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
