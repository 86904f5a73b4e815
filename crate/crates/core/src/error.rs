use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke a precondition: mismatched lengths, empty inputs, coefficients outside D.
    #[error("{0}")]
    Contract(String),
    /// An input lies outside the mathematical domain of the operation.
    #[error("{0}")]
    Domain(String),
    /// NaN or infinity appeared where a finite value is required.
    #[error("{0}")]
    Numeric(String),
    /// A step index outside the range a schedule was built for.
    #[error("{0}")]
    Range(String),
    /// Unknown or malformed configuration key or value.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: record schema version {found}, this build reads version {expected}", path.display())]
    SchemaVersion {
        path: PathBuf,
        expected: u32,
        found: String,
    },
    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    /// Short stable tag used as the machine-parsable prefix of CLI failures.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Domain(_) => "domain",
            Error::Numeric(_) => "numeric",
            Error::Range(_) => "range",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::SchemaVersion { .. } => "schema",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! contract {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::Error::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use contract;
