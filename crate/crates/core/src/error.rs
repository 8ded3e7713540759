use std::fmt;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numeric error in cell {cell}: {what}")]
    Numeric { cell: usize, what: String },

    #[error("singular matrix during {step}")]
    Singular { step: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contact problem is not coercive: {0}")]
    NullSpace(String),

    #[error("newton solver did not converge after {iterations} iterations (last residual {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("steady state not reached by t = {t_end} (last rate {last_rate:.3e})")]
    NotSteady { t_end: f64, last_rate: f64 },

    #[error("time step {0} must be positive")]
    TimeStep(f64),

    #[error("{0}")]
    NoData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Solver,
    Geometry,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::TimeStep(_) | Error::NoData(_) => ErrorKind::Config,
            Error::Geometry(_) => ErrorKind::Geometry,
            _ => ErrorKind::Solver,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Config => "config",
            ErrorKind::Solver => "solver",
            ErrorKind::Geometry => "geometry",
        };
        f.write_str(s)
    }
}
