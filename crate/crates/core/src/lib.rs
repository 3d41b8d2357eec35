//! Simulation and reconfiguration of thermoelectric generator (TEG) arrays
//! mounted along a vehicle radiator.
//!
//! The crate is organised bottom-up:
//!
//! - [`thermal`]: radiator surface temperature profile and drive traces
//! - [`teg`]: single-module electrical model and maximum power point
//! - [`array`](mod@array): series-of-parallel-groups configurations, switch fabric,
//!   exact array solve and MPP tracking
//! - [`charger`]: converter efficiency around the battery charging voltage
//! - [`predictor`]: regression-based temperature forecasting and MAPE
//! - [`reconfig`]: the O(N) greedy reconfiguration (INOR), the
//!   prediction-gated controller (DNOR), and an exhaustive oracle
//! - [`sim`]: discrete-time runs, overhead accounting, scheme comparison,
//!   runtime scaling
//! - [`cli`]: config file loading and the `tegsim` subcommands
//!
//! Runnable walkthroughs of each capability live in `examples/`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod charger;
pub mod cli;
pub mod error;
pub mod predictor;
pub mod reconfig;
pub mod sim;
pub mod teg;
pub mod thermal;

pub use error::{Error, Result};
