//! Experience replay.

use std::sync::Arc;

use rand::Rng;

use crate::env::Observation;

/// One experience tuple. Observations are shared pointers because consecutive
/// transitions of a drone reuse the same tensor.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Arc<Observation>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Arc<Observation>,
}

/// Bounded ring buffer of transitions with uniform sampling.
#[derive(Debug)]
pub struct ReplayMemory {
    buf: Vec<Transition>,
    pos: usize,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { buf: Vec::with_capacity(capacity.min(1 << 20)), pos: 0, capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends a transition, evicting the oldest once full.
    pub fn push(&mut self, transition: Transition) {
        if self.buf.len() < self.capacity {
            self.buf.push(transition);
        } else {
            self.buf[self.pos] = transition;
        }
        self.pos = (self.pos + 1) % self.capacity;
    }

    /// Uniform sample (with replacement) over current contents.
    pub fn sample<'a, R: Rng>(&'a self, rng: &mut R, count: usize) -> Vec<&'a Transition> {
        assert!(!self.buf.is_empty(), "cannot sample an empty replay memory");
        (0..count).map(|_| &self.buf[rng.gen_range(0..self.buf.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Observation;

    fn obs(tag: f32) -> Arc<Observation> {
        Arc::new(Observation::from_data(4, 2, vec![tag; 32]).unwrap())
    }

    fn transition(tag: f32) -> Transition {
        Transition { obs: obs(tag), action: 0, reward: tag as f64, next_obs: obs(tag + 0.5) }
    }

    #[test]
    fn ring_evicts_oldest_first() {
        let mut mem = ReplayMemory::new(3);
        for i in 0..5 {
            mem.push(transition(i as f32));
        }
        assert_eq!(mem.len(), 3);
        let rewards: Vec<f64> = mem.buf.iter().map(|t| t.reward).collect();
        // 0 and 1 evicted; slots hold 3, 4, 2 after wrap.
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_is_uniform() {
        let mut mem = ReplayMemory::new(100);
        for i in 0..100 {
            mem.push(transition(i as f32));
        }
        let mut rng = crate::rng::stream(5, crate::rng::domain::REPLAY, 0);
        let mut counts = [0u32; 100];
        for _ in 0..100_000 {
            let s = mem.sample(&mut rng, 1);
            counts[s[0].reward as usize] += 1;
        }
        // Binomial(1e5, 0.01): sigma ~= 31.5; require every count within 5 sigma.
        let sigma = (100_000.0f64 * 0.01 * 0.99).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - 1000.0).abs();
            assert!(dev < 5.0 * sigma, "item {i} drawn {c} times ({dev:.1} off)");
        }
    }
}
