//! Age-of-information optimal unicast, multicast and broadcast scheduling
//! from a roadside unit to moving vehicles, with transmit-power allocation.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: problem instance, straight-road mobility, LoS channels.
//! - [`link`]: short-packet decoding error, SINR thresholds, MRT beams.
//! - [`aoi`]: age recursion, analytic bounds, weighted-sum objective, reward.
//! - [`power`]: minimum-power allocation for a fixed assignment.
//! - [`sched`]: action space, random, exhaustive and ant-colony schedulers.
//! - [`dqn`]: deep Q-learning agent with a small hand-written MLP.
//! - [`experiment`]: seeded replications, sweeps and solver comparisons.

pub mod aoi;
pub mod assignment;
pub mod config;
pub mod dqn;
pub mod env;
pub mod error;
pub mod experiment;
pub mod link;
pub mod power;
pub mod rng;
pub mod scenario;
pub mod sched;

pub use assignment::Assignment;
pub use config::SolverConfig;
pub use env::{Environment, SlotRecord};
pub use error::{Error, Result};
pub use scenario::{build_scenario, Scenario, ScenarioConfig};
pub use sched::{SolveResult, SolverMeta};
pub use experiment::{ExperimentSpec, RunSummary, SolverKind, Sweep};
