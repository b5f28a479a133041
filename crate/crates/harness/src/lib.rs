//! Experiments, file formats and the `offload` command line for
//! [`offload_core`].
//!
//! * [`config`]: JSON configuration with reference defaults.
//! * [`generate`]: seeded instances and the random-order baseline.
//! * [`experiment`]: the three Monte Carlo sweeps and their CSV/JSON output.
//! * [`validate`]: invariant and reproduction checks.
//! * [`cli`]: argument parsing and subcommands.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod validate;

pub use config::Config;
pub use error::{HarnessError, Result};
