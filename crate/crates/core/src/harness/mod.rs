//! Baselines, experiment runners and reporting.

mod brute;
mod experiments;
mod report;
mod zigzag;

pub use brute::{brute_force_search, BruteForceResult, DEFAULT_BUDGET};
pub use experiments::{
    convergence_experiment, inference_timing, mode_for, patrol_comparison, run_policy_eval,
    swarm_comparison, write_eval_csv, EvalStep,
};
pub use report::{
    ConvergenceRecord, ConvergenceReport, PatrolRecord, PatrolReport, SwarmRecord, SwarmReport,
    TimingReport,
};
pub use zigzag::ZigzagPlan;
