//! Cycle-level GPU warp-scheduling simulator.
//!
//! The crate models streaming multiprocessors with two warp schedulers each
//! and lets pluggable policies decide which warp issues every cycle. Besides
//! the classic round-robin, greedy-then-oldest and two-level policies it ships
//! a learned scheduler: a SARSA agent with linear function approximation over
//! a bucketed encoding of the SM state, plus a genetic search over that
//! agent's design space and an experiment runner that produces comparison
//! reports.
//!
//! See the `examples/` directory of this crate for runnable entry points.

pub mod error;
pub mod experiment;
pub mod ga;
pub mod policy;
pub mod rl;
pub mod rlws;
pub mod sched;
pub mod seed;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
pub use policy::{run_kernel, run_kernel_with_theta, PolicySpec};
