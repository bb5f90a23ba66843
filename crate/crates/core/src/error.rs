use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge after {nodes} nodes (last estimate {last}, previous {previous})")]
    QuadratureNotConverged { nodes: usize, last: f64, previous: f64 },

    #[error("quadrature failed at lag {lag}: {source}")]
    LagFailure {
        lag: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid spacings plan: {0}")]
    InvalidPlan(String),

    #[error("degenerate spacing at index {index} (scaled value {value})")]
    DegenerateSpacing { index: usize, value: f64 },

    #[error("derivative of {name} is undefined at x = {x}")]
    DerivativeUndefined { name: String, x: f64 },

    #[error("unknown tuning function '{0}'")]
    UnknownTuning(String),

    #[error("tuning function is affine: {0}")]
    AffineTuning(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("density not positive: delta * sup|l| = {0}")]
    DensityNotPositive(f64),

    #[error("unsupported limit: {0}")]
    UnsupportedLimit(String),

    #[error("target power unreachable at feasible k: {0}")]
    TargetUnreachable(String),

    #[error("{degenerate} of {reps} replications produced degenerate spacings")]
    DegenerateAbort { degenerate: usize, reps: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
