use thiserror::Error;

/// Errors raised by the library.
///
/// Divergent energies are not errors: they are reported as `+inf` values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel evaluated outside its domain at t = {t}")]
    Domain { t: f64 },

    #[error("kernel value is not finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid spacing {spacing} does not resolve mollifier radius {radius} (need spacing <= radius/4)")]
    GridTooCoarse { spacing: f64, radius: f64 },

    #[error("no confining radius: kernel stays below {threshold} on the scanned range")]
    NotConfining { threshold: f64 },

    #[error("j too small for this kernel: no root of the smoothing schedule in (0, {bracket}]")]
    ScheduleNoRoot { bracket: f64 },

    #[error("gram matrix contains NaN at ({row}, {col})")]
    NanInGram { row: usize, col: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
