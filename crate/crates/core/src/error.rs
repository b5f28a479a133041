use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure classes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// A rate inverse below the peak-power bound `D` (would need `p > p_max`).
    InfeasiblePower { xi: f64, lower_bound: f64 },
    /// A task or configuration parameter failed validation.
    InvalidParameter { what: &'static str, value: f64 },
    /// A schedule that is not a permutation of `0..n`.
    InvalidSchedule,
    /// Two inputs that should describe the same number of tasks do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A zero transmit power produces an unbounded upload time.
    InfiniteDuration { task: usize },
    /// An exhaustive oracle was asked for an instance above its size cap.
    SizeCapExceeded { n: usize, cap: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InfeasiblePower { xi, lower_bound } => write!(
                f,
                "rate inverse {xi:e} s/bit is below the peak-power bound {lower_bound:e} s/bit"
            ),
            Error::InvalidParameter { what, value } => write!(f, "invalid {what}: {value}"),
            Error::InvalidSchedule => {
                f.write_str("schedule is not a permutation of the task indices")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InfiniteDuration { task } => {
                write!(
                    f,
                    "task {task} has zero transmit power and never finishes uploading"
                )
            }
            Error::SizeCapExceeded { n, cap } => {
                write!(
                    f,
                    "instance has {n} tasks, exhaustive search is capped at {cap}"
                )
            }
        }
    }
}

impl core::error::Error for Error {}
