//! Double-DQN training on the patrolling environment.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;

use super::network::{soft_update, AdamState, Network, NetworkConfig};
use super::replay::{ReplayMemory, Transition};
use crate::env::{
    encode_observation, step_swarm, Action, DroneState, EnvConfig, ObsMode, Observation,
    SwarmState,
};
use crate::relevance::{generate_random_map, MapGenConfig};
use crate::rng::{self, domain};
use crate::util::g6;
use crate::{Error, Result};

/// How the bootstrap target evaluates the successor state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetRule {
    /// Select with the online network, evaluate with the target network.
    DoubleDqn,
    /// Max over the target network alone.
    TargetNetwork,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    pub soft_alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub replay_capacity: usize,
    pub episode_len: usize,
    pub drones_min: usize,
    pub drones_max: usize,
    pub target_rule: TargetRule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            batch_size: 64,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 100_000,
            soft_alpha: 0.001,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            replay_capacity: 10_000,
            episode_len: 20,
            drones_min: 1,
            drones_max: 5,
            target_rule: TargetRule::DoubleDqn,
        }
    }
}

impl TrainConfig {
    /// Defaults per mode: the cooperative input needs three times the epochs.
    pub fn default_for(mode: ObsMode) -> Self {
        let mut cfg = Self::default();
        if mode == ObsMode::Coop {
            cfg.epochs = 300_000;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1)".into()));
        }
        if !(self.soft_alpha > 0.0 && self.soft_alpha <= 1.0) {
            return Err(Error::Config("soft alpha must lie in (0, 1]".into()));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return Err(Error::Config("batch size must be in [1, replay capacity]".into()));
        }
        if self.epochs == 0 || self.episode_len == 0 {
            return Err(Error::Config("epochs and episode length must be positive".into()));
        }
        if self.drones_min == 0 || self.drones_min > self.drones_max {
            return Err(Error::Config("drone count range must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(Error::Config("epsilon bounds must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Linear exploration schedule from `start` at epoch 0 to `end` at the last
/// epoch.
pub fn epsilon_schedule(epoch: usize, total_epochs: usize, start: f64, end: f64) -> f64 {
    if total_epochs <= 1 {
        return start;
    }
    let frac = epoch as f64 / (total_epochs - 1) as f64;
    // Lerp form keeps both endpoints exact.
    start * (1.0 - frac) + end * frac
}

/// Epsilon-greedy action over the canonical forward pass: explore uniformly
/// with probability `epsilon`, otherwise take the lowest-index argmax.
pub fn select_action<R: Rng>(
    net: &Network<f32>,
    obs: &Observation,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..net.config.outputs));
    }
    let q = net.forward_obs(obs)?;
    Ok(argmax(&q))
}

/// Lowest-index argmax.
pub fn argmax(q: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Bootstrap target from precomputed successor Q-vectors.
pub fn target_from_q(
    q_next_online: &[f32],
    q_next_target: &[f32],
    reward: f64,
    gamma: f64,
    rule: TargetRule,
) -> f64 {
    let bootstrap = match rule {
        TargetRule::DoubleDqn => q_next_target[argmax(q_next_online)] as f64,
        TargetRule::TargetNetwork => {
            q_next_target.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64
        }
    };
    reward + gamma * bootstrap
}

/// The Double-DQN target for one transition: the online network selects the
/// successor action, the target network evaluates it. Continuing task — no
/// terminal cutoff.
pub fn double_dqn_target(
    online: &Network<f32>,
    target: &Network<f32>,
    transition: &Transition,
    gamma: f64,
) -> Result<f64> {
    let q_online = online.forward_obs(&transition.next_obs)?;
    let q_target = target.forward_obs(&transition.next_obs)?;
    Ok(target_from_q(&q_online, &q_target, transition.reward, gamma, TargetRule::DoubleDqn))
}

/// One semi-gradient MSE step on a batch: targets are held constant, the
/// gradient flows only through the chosen-action outputs, and a single Adam
/// update is applied. Returns the batch loss.
pub fn train_batch(
    online: &mut Network<f32>,
    target: &Network<f32>,
    batch: &[&Transition],
    config: &TrainConfig,
    adam: &mut AdamState<f32>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Config("cannot train on an empty batch".into()));
    }
    let inputs: Vec<&[f32]> = batch.iter().map(|t| t.obs.data()).collect();
    let next_inputs: Vec<&[f32]> = batch.iter().map(|t| t.next_obs.data()).collect();

    let fwd = online.forward_batch(&inputs)?;
    let q_next_online = online.forward_batch(&next_inputs)?.q;
    let q_next_target = target.forward_batch(&next_inputs)?.q;

    let b = batch.len();
    let mut dq = Array2::<f32>::zeros((b, online.config.outputs));
    let mut loss = 0.0;
    for (i, transition) in batch.iter().enumerate() {
        let y = target_from_q(
            q_next_online.row(i).as_slice().unwrap(),
            q_next_target.row(i).as_slice().unwrap(),
            transition.reward,
            config.gamma,
            config.target_rule,
        );
        let q_a = fwd.q[[i, transition.action]] as f64;
        let err = q_a - y;
        loss += err * err;
        dq[[i, transition.action]] = (2.0 * err / b as f64) as f32;
    }
    loss /= b as f64;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: adam.step_count() as usize });
    }

    let grads = online.backward_batch(&fwd, &dq);
    adam.apply(online, &grads);
    Ok(loss)
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub epoch: usize,
    pub epsilon: f64,
    pub loss: f64,
    pub mean_reward: f64,
    pub wall_ms: u64,
    /// Drones simulated this epoch (not part of the CSV contract).
    pub drones: usize,
}

/// Per-epoch training records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub entries: Vec<LogEntry>,
}

impl TrainingLog {
    /// Writes `epoch,epsilon,loss,mean_reward,wall_ms` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "epoch,epsilon,loss,mean_reward,wall_ms")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.epoch,
                g6(e.epsilon),
                g6(e.loss),
                g6(e.mean_reward),
                e.wall_ms
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Progress callback invoked once per epoch with the entry just logged.
pub type ProgressFn<'a> = dyn FnMut(&LogEntry) + 'a;

/// Runs the full training loop. Every epoch creates a fresh random map and a
/// random swarm, rolls out one episode under the epsilon-greedy policy,
/// pushes one transition per drone per step into replay, then performs one
/// batch update and one soft target update. Fully deterministic in `seed`.
pub fn train_run(
    mode: ObsMode,
    config: &TrainConfig,
    env: &EnvConfig,
    mapgen: &MapGenConfig,
    seed: u64,
    mut progress: Option<&mut ProgressFn>,
) -> Result<(Network<f32>, TrainingLog)> {
    config.validate()?;
    env.validate()?;

    let net_config = NetworkConfig {
        input_size: env.window_size,
        ..NetworkConfig::standard(mode.channels())
    };
    let mut online = Network::<f32>::init(net_config, rng::derive_seed(seed, domain::WEIGHTS, 0));
    let mut target = online.clone();
    let mut adam = AdamState::new(
        &online,
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
    );
    let mut replay = ReplayMemory::new(config.replay_capacity);
    let mut replay_rng = rng::stream(seed, domain::REPLAY, 0);
    let mut log = TrainingLog::default();
    let grid = env.grid();

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let epsilon =
            epsilon_schedule(epoch, config.epochs, config.epsilon_start, config.epsilon_end);

        let map = generate_random_map(rng::derive_seed(seed, domain::MAP, epoch as u64), mapgen, &grid)?;
        let mut init_rng = rng::stream(seed, domain::INIT_STATES, epoch as u64);
        let drones = init_rng.gen_range(config.drones_min..=config.drones_max);
        let states: Vec<DroneState> =
            (0..drones).map(|_| DroneState::random(&mut init_rng, env)).collect();
        let mut swarm = SwarmState::new(states, &map, env)?;
        let mut action_rng = rng::stream(seed, domain::ACTIONS, epoch as u64);

        let mut current_obs: Vec<Arc<Observation>> = (0..drones)
            .map(|i| Arc::new(encode_observation(&swarm, i, &map, mode, env)))
            .collect();

        let mut reward_sum = 0.0;
        let mut reward_count = 0usize;
        for _ in 0..config.episode_len {
            // Epsilon draws come first per drone, so the stream layout does
            // not depend on how many drones exploit.
            let mut actions = Vec::with_capacity(drones);
            let mut pending: Vec<usize> = Vec::new();
            for i in 0..drones {
                if action_rng.gen::<f64>() < epsilon {
                    actions.push(Some(action_rng.gen_range(0..Action::COUNT)));
                } else {
                    actions.push(None);
                    pending.push(i);
                }
            }
            if !pending.is_empty() {
                let inputs: Vec<&[f32]> =
                    pending.iter().map(|&i| current_obs[i].data()).collect();
                let qs = online.forward_many(&inputs)?;
                for (slot, q) in pending.iter().zip(&qs) {
                    actions[*slot] = Some(argmax(q));
                }
            }
            let chosen: Vec<Action> = actions
                .iter()
                .map(|a| Action::from_index(a.expect("every drone acted")).expect("valid index"))
                .collect();

            let rewards = step_swarm(&mut swarm, &chosen, &map, env)?;
            let next_obs: Vec<Arc<Observation>> = (0..drones)
                .map(|i| Arc::new(encode_observation(&swarm, i, &map, mode, env)))
                .collect();

            for i in 0..drones {
                replay.push(Transition {
                    obs: Arc::clone(&current_obs[i]),
                    action: chosen[i].index(),
                    reward: rewards[i],
                    next_obs: Arc::clone(&next_obs[i]),
                });
                reward_sum += rewards[i];
                reward_count += 1;
            }
            current_obs = next_obs;
        }

        let batch = replay.sample(&mut replay_rng, config.batch_size);
        let loss = train_batch(&mut online, &target, &batch, config, &mut adam)
            .map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { epoch },
                other => other,
            })?;
        soft_update(&mut target, &online, config.soft_alpha);

        let entry = LogEntry {
            epoch,
            epsilon,
            loss,
            mean_reward: reward_sum / reward_count.max(1) as f64,
            wall_ms: started.elapsed().as_millis() as u64,
            drones,
        };
        if let Some(cb) = progress.as_deref_mut() {
            cb(&entry);
        }
        log.entries.push(entry);
    }
    Ok((online, log))
}
