use thiserror::Error;

/// Errors surfaced by the simulator and learner.
#[derive(Debug, Error)]
pub enum Error {
    /// A projected ray does not hit the ground plane.
    #[error("ray does not intersect the ground plane (at or above the horizon)")]
    Horizon,

    /// Two grids that must share a shape do not.
    #[error("grid shape mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    ShapeMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    /// An action list does not match the swarm size.
    #[error("action count {actions} does not match drone count {drones}")]
    ActionCountMismatch { actions: usize, drones: usize },

    /// Brute-force search would evaluate more states than allowed.
    #[error("brute-force state count {states} exceeds budget {budget}")]
    BudgetExceeded { states: u64, budget: u64 },

    /// Training produced a non-finite loss.
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    Config(String),

    /// Malformed binary or CSV payload.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
