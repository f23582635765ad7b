//! Tabular Q-iteration on explicit deterministic MDPs.
//!
//! Small enough to solve exactly, this serves as an independent oracle for
//! the Bellman machinery the network approximates.

use crate::{Error, Result};

/// An explicit deterministic MDP: `transitions[s][a]` is the successor state,
/// `rewards[s][a]` the immediate reward.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub transitions: Vec<Vec<usize>>,
    pub rewards: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn states(&self) -> usize {
        self.transitions.len()
    }

    pub fn actions(&self) -> usize {
        self.transitions.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<()> {
        let states = self.states();
        let actions = self.actions();
        if states == 0 || actions == 0 {
            return Err(Error::Config("MDP needs at least one state and action".into()));
        }
        if states * actions > 1000 {
            return Err(Error::BudgetExceeded {
                states: (states * actions) as u64,
                budget: 1000,
            });
        }
        for (s, (row_t, row_r)) in self.transitions.iter().zip(&self.rewards).enumerate() {
            if row_t.len() != actions || row_r.len() != actions {
                return Err(Error::Config(format!("ragged MDP rows at state {s}")));
            }
            if row_t.iter().any(|&n| n >= states) {
                return Err(Error::Config(format!("dangling successor at state {s}")));
            }
        }
        Ok(())
    }
}

/// Synchronous Q-iteration from zero initialization until the sup-norm step
/// change drops below `tolerance` (or `max_iterations` sweeps).
pub fn tabular_q_iteration(
    mdp: &TabularMdp,
    gamma: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<Vec<f64>>> {
    mdp.validate()?;
    let states = mdp.states();
    let actions = mdp.actions();
    let mut q = vec![vec![0.0; actions]; states];
    for _ in 0..max_iterations {
        let mut next = vec![vec![0.0; actions]; states];
        let mut delta: f64 = 0.0;
        for s in 0..states {
            for a in 0..actions {
                let succ = mdp.transitions[s][a];
                let best = q[succ].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                next[s][a] = mdp.rewards[s][a] + gamma * best;
                delta = delta.max((next[s][a] - q[s][a]).abs());
            }
        }
        q = next;
        if delta < tolerance {
            break;
        }
    }
    Ok(q)
}
