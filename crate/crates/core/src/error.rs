use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{name}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("domain error: {op} of {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("jet order {order} out of range (max {max})")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("insufficient jet order: need {needed}, have {have}")]
    InsufficientOrder { needed: usize, have: usize },

    #[error("point has {found} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point {point:?} outside chart of `{patch}`")]
    OutOfChart { patch: String, point: Vec<f64> },

    #[error("singular metric on `{patch}` at {point:?}")]
    SingularMetric { patch: String, point: Vec<f64> },

    #[error("metric on `{patch}` is not {what}")]
    InvalidMetric { patch: String, what: String },

    #[error("warping function `{name}` is non-positive ({value}) at {point:?}")]
    NonPositiveWarping {
        name: &'static str,
        value: f64,
        point: Vec<f64>,
    },

    #[error("map is not harmonic: max |tau| = {max_tension:e} > {tol:e}")]
    NotHarmonic { max_tension: f64, tol: f64 },

    #[error("`{form}` cannot be evaluated: {reason}")]
    IllTyped { form: String, reason: String },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
