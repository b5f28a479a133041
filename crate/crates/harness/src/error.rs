use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug)]
pub enum HarnessError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    /// Malformed or out-of-range configuration or input file.
    Config(String),
    /// A model-level error from the core crate.
    Model(offload_core::Error),
    Csv(csv::Error),
    /// One or more validation checks failed.
    Validation(Vec<String>),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable class used in the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } | Self::Csv(_) => "io",
            Self::Config(_) => "config",
            Self::Model(e) if is_oracle_class(e) => "infeasible",
            Self::Model(_) => "model",
            Self::Validation(_) => "validation",
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Csv(_) => 1,
            Self::Config(_) => 2,
            Self::Model(e) if is_oracle_class(e) => 3,
            // Anything else the core rejects came from bad input values.
            Self::Model(_) => 2,
            Self::Validation(_) => 4,
        }
    }
}

fn is_oracle_class(e: &offload_core::Error) -> bool {
    matches!(
        e,
        offload_core::Error::SizeCapExceeded { .. } | offload_core::Error::InfeasiblePower { .. }
    )
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Config(msg) => write!(f, "{msg}"),
            Self::Model(e) => write!(f, "{e}"),
            Self::Csv(e) => write!(f, "csv: {e}"),
            Self::Validation(failed) => write!(f, "failed checks: {}", failed.join(", ")),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io { source, .. } => Some(source),
            Self::Model(e) => Some(e),
            Self::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<offload_core::Error> for HarnessError {
    fn from(e: offload_core::Error) -> Self {
        Self::Model(e)
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e)
    }
}
