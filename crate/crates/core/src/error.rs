use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("dimension {n} exceeds the supported maximum {max}")]
    Dimension { n: usize, max: usize },
    #[error("{0}")]
    Range(String),
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("point set is not closed under the requested reflection")]
    NotClosed,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
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

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}

pub(crate) fn check_dim(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::Dimension { n, max })
    } else {
        Ok(())
    }
}
