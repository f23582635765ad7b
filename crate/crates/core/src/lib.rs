//! Drone-swarm patrolling over relevance maps.
//!
//! The crate simulates camera-equipped drones covering a ground area whose
//! cells carry uneven relevance, and trains Double-DQN policies to patrol it:
//!
//! * [`geometry`] — pinhole camera footprints on the ground plane and their
//!   rasterization onto a grid;
//! * [`relevance`] — relevance maps, temporal masks, the trapezoidal penalty,
//!   Constrained Observed Relevance (COR) and the global coverage metric;
//! * [`env`] — the deterministic drone MDP: discretized states, the 12-action
//!   transition function, swarm stepping and observation encoding;
//! * [`learner`] — the convolutional Q-network, replay memory, Double-DQN
//!   targets, Adam, the training loop and a tabular Q-iteration oracle;
//! * [`harness`] — baselines (zigzag, brute force), experiment runners and
//!   CSV reporting.

pub mod config;
pub mod env;
mod error;
pub mod geometry;
pub mod harness;
pub mod learner;
pub mod relevance;
pub mod rng;
mod util;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
