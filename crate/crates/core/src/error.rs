use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// An element of a sample lies outside the domain of a transform.
    #[error("value {value} at index {index} is outside the domain: {reason}")]
    DomainAt {
        index: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("sample too small: {given} observations, at least {needed} required")]
    SampleTooSmall { given: usize, needed: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// A transform produced an infinite value (probability 0 or 1 at `value`).
    #[error(
        "overflow: transform of {value}{} is not finite",
        .index.map(|i| format!(" (index {i})")).unwrap_or_default()
    )]
    Overflow { index: Option<usize>, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no feasible Box-Cox parameters on the grid ({evaluated} candidates rejected)")]
    InfeasibleGrid { evaluated: usize },

    #[error("no valid session pair for measure `{measure}` (subjects per pair: {counts})")]
    NoValidPair { measure: String, counts: String },

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("measure `{measure}`: {source}")]
    Measure {
        measure: String,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub fn in_measure(self, measure: &str) -> Self {
        Error::Measure {
            measure: measure.to_string(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
