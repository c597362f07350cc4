use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("zeno guard tripped: {events} events within {window:e} time units ending at t = {time}")]
    Zeno { events: usize, window: f64, time: f64 },

    #[error("overlap detected between particles {i} and {j}: distance {distance:e} < epsilon {epsilon:e}")]
    Overlap { i: usize, j: usize, distance: f64, epsilon: f64 },

    #[error("rejection sampler stalled: {attempts} attempts without an admissible configuration (acceptance below 1e-3)")]
    AcceptanceTooLow { attempts: u64 },

    #[error("time {t} outside trajectory range [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("missing table entry: {0}")]
    MissingEntry(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("majorant underestimated: relative speed {speed} exceeds bound {bound}")]
    MajorantUnderestimate { speed: f64, bound: f64 },

    #[error("exponential overflow at grid node {node}: exponent {exponent}")]
    Overflow { node: usize, exponent: f64 },

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("trajectory format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
