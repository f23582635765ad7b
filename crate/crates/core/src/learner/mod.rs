//! Q-function machinery: network, optimizer, replay, targets, training loop
//! and the tabular oracle.

mod io;
mod network;
mod replay;
mod tabular;
mod train;

pub use io::{load_weights, save_weights};
pub use network::{soft_update, AdamState, BatchForward, Gradients, Network, NetworkConfig, Real};
pub use replay::{ReplayMemory, Transition};
pub use tabular::{tabular_q_iteration, TabularMdp};
pub use train::{
    argmax, double_dqn_target, epsilon_schedule, select_action, target_from_q, train_batch,
    train_run, LogEntry, ProgressFn, TargetRule, TrainConfig, TrainingLog,
};
