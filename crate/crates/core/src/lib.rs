//! Simulation and learning harness for QoT-aware routing, modulation, band
//! and spectrum assignment in L+C+S multi-band elastic optical networks.
//!
//! The pieces, bottom-up:
//!
//! * [`topology`]: network graph, topology files, k-shortest paths
//! * [`spectrum`]: band plan, per-link occupancy, first fit
//! * [`qot`]: GSNR estimation, modulation thresholds, QoT database
//! * [`traffic`]: Poisson request streams
//! * [`env`]: the provisioning environment (observation, mask, reward)
//! * [`heuristics`]: KSP first-fit baselines
//! * [`agent`]: masked actor-critic learner
//! * [`config`] and [`experiment`]: the command-line experiment harness

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod heuristics;
pub mod qot;
pub mod spectrum;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
