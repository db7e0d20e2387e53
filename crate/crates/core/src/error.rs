use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside domain ({expected})")]
    Domain {
        func: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("series truncation needs more than {cap} terms for lambda_p = {lambda_p}")]
    TruncationCap { cap: usize, lambda_p: f64 },

    #[error("numerical conditioning failure in {what} at x = {x}: raw value {value}")]
    Conditioning {
        what: &'static str,
        x: f64,
        value: f64,
    },

    #[error("quadrature did not converge: worst subinterval [{a}, {b}], error estimate {abs_err:e} > tolerance {tol:e}")]
    Quadrature {
        a: f64,
        b: f64,
        abs_err: f64,
        tol: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table: {0}")]
    Table(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(func: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            func,
            value,
            expected,
        }
    }

    /// Wraps `self` with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
