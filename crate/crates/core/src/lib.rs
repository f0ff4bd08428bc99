//! Periodic Markov-chain analysis of hybrid (direct + indirect) spare-satellite
//! replenishment for large LEO constellations.
//!
//! The crate is organised bottom-up:
//!
//! * [`config`] and [`orbital`] turn a scenario into a discrete time grid.
//! * [`stochastic`] builds the elementary failure/replenishment matrices.
//! * [`chain`] holds the periodic stationary solver shared by both layers.
//! * [`constellation`] and [`parking`] assemble the two coupled layers, and
//!   [`hybrid`] couples them by fixed-point iteration on the parking
//!   availability / demand pair.
//! * [`approx`] provides the reduced (truncated, staged-delay) model.
//! * [`metrics`] prices a solution; [`simulate`] is an independent Monte Carlo
//!   oracle; [`optimize`] runs the constrained genetic search and sweeps.
//!
//! Stock distributions are ordered from the highest level down to zero
//! throughout, and every transition matrix is column-stochastic
//! (`next = M * current`).

pub mod approx;
pub mod chain;
pub mod config;
pub mod constellation;
pub mod error;
pub mod exec;
pub mod hybrid;
pub mod linalg;
pub mod metrics;
pub mod optimize;
pub mod orbital;
pub mod parking;
pub mod simulate;
pub mod stochastic;
pub mod validation;

pub use config::{
    ConstellationConfig, CostParams, PolicyParams, ScenarioConfig, StochParams, TimeGrid,
};
pub use error::{Error, Result};
pub use hybrid::{solve_hybrid, HybridOptions, HybridSolution};
pub use metrics::{evaluate_metrics, MetricsReport};

