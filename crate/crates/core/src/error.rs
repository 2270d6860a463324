use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inner series must have constant term 1, found {0}")]
    NonUnitConstantTerm(f64),

    #[error(
        "precision exhausted: c_{index} keeps only {bits:.1} significant bits at {precision} bits"
    )]
    PrecisionExhausted {
        index: usize,
        bits: f64,
        precision: u32,
    },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("zeta has a pole at s = 1")]
    PoleAtOne,

    #[error("Dirichlet series does not converge at s = {s} (rightmost pole {rho})")]
    NotConvergent { s: f64, rho: f64 },

    #[error("profile carries {available} values D(-l), {requested} requested")]
    MissingDeltaCoeffs { requested: usize, available: usize },

    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    #[error("truncation at K = {k} too shallow: tail bound {tail:e} exceeds {allowed:e}")]
    TruncationTooShallow { k: usize, tail: f64, allowed: f64 },

    #[error("model has no positive mass: Lambda_k vanishes identically")]
    NoPositiveMass,

    #[error("model `{0}` has no asymptotic profile")]
    MissingProfile(String),

    #[error("support gcd has not stabilized by J = {0}")]
    Unstabilized(usize),

    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("log S diverges: |w| = {0} >= 1")]
    SeriesDivergence(f64),

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {err:e}")]
    QuadratureNotConverged { a: f64, b: f64, err: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
