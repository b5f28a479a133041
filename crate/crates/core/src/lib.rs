//! Joint task-offloading order and transmit-power optimization for a
//! single-user mobile-edge computing system.
//!
//! A device holds `N` independent tasks. Each task's input is uploaded over a
//! single wireless link and then executed first-come-first-serve on one server
//! CPU, so the pair (uplink, server) behaves as a two-machine permutation flow
//! shop. The crate minimizes `makespan + eta * transmit_energy` by alternating
//!
//! * the optimal upload order for fixed powers ([`flowshop::johnson_schedule`]), and
//! * the optimal powers for a fixed order ([`power::solve_p3`]), a convex
//!   program in the rate-inverse variables `xi = 1 / rate(p)`.
//!
//! [`oracle`] holds exhaustive references used to validate both halves.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod linalg;

pub mod altmin;
pub mod channel;
pub mod delay;
pub mod flowshop;
pub mod oracle;
pub mod power;

pub use altmin::{alternate, alternate_from, AltMinConfig, SolveReport};
pub use channel::{ChannelConfig, PhiValue, RateInverse};
pub use delay::{
    Instance, ObjectiveValue, PowerAllocation, Schedule, ServerConfig, TaskSpec, Timeline,
};
pub use error::{Error, Result};
pub use flowshop::{johnson_schedule, partition, JohnsonPartition};
pub use oracle::OracleResult;
pub use power::{build_p3, solve_p3, P3Method, P3Problem, P3Solution, SolverOptions};
