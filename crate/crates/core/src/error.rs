use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid annulus: r = {r}, eps = {eps}")]
    InvalidAnnulus { r: f64, eps: f64 },
    #[error("invalid box: width = {width}, height = {height}")]
    InvalidBox { width: f64, height: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("centers {i} and {j} are {dist} apart, closer than the required {min}")]
    SeparationViolated {
        i: usize,
        j: usize,
        dist: f64,
        min: f64,
    },
    #[error("crossing flags are undefined on a torus")]
    CrossingOnTorus,
    #[error("expected-count guard violated: |A| = {area} must be < 2")]
    AreaGuard { area: f64 },
    #[error("horizon T = {horizon} exceeds e^(eta K) eta / 3 = {limit}")]
    HorizonTooLong { horizon: u64, limit: f64 },
    #[error("bracket [{lo}, {hi}] does not straddle crossing frequency 0.5 (got {f_lo}, {f_hi})")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error(
        "initialization failed: found {found} of {needed} separated points in the origin block"
    )]
    InitializationFailed { found: usize, needed: usize },
    #[error("constraint flags violated in strict mode: {0}")]
    StrictConstraints(String),
    #[error("unknown check id `{0}`")]
    UnknownLemma(String),
    #[error("malformed point file: {0}")]
    Parse(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
