use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative time t = {0}; the packet model is defined for t >= 0")]
    NegativeTime(f64),

    #[error("packet evaluations disagree on the evaluation point")]
    MismatchedPoint,

    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("slit index {index} out of range for {n_slits} slits")]
    SlitIndex { index: usize, n_slits: usize },

    #[error("channel index {index} out of range for {len} channels")]
    ChannelIndex { index: usize, len: usize },

    #[error("nodal point at x = {x}, t = {t}: velocity undefined")]
    NodalPoint { x: f64, t: f64 },

    #[error("boundary leak at step {step}: edge density ratio {ratio:e}")]
    BoundaryLeak { step: usize, ratio: f64 },

    #[error("degenerate density: integrated intensity {0:e}")]
    DegenerateDensity(f64),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Stable short name, used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NegativeTime(_) => "NegativeTime",
            Error::MismatchedPoint => "MismatchedPoint",
            Error::Validation(_) => "ValidationError",
            Error::SlitIndex { .. } => "SlitIndex",
            Error::ChannelIndex { .. } => "ChannelIndex",
            Error::NodalPoint { .. } => "NodalPoint",
            Error::BoundaryLeak { .. } => "BoundaryLeak",
            Error::DegenerateDensity(_) => "DegenerateDensity",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
