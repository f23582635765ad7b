//! Seed derivation for reproducible runs.
//!
//! Every source of randomness (weight init, map generation, epsilon draws,
//! replay sampling, experiment seeds) draws from its own ChaCha stream whose
//! seed is derived from one master seed, a domain tag and a counter. Streams
//! are therefore independent of call interleaving: adding draws to one stream
//! never shifts another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Randomness domains, used as the middle word of [`derive_seed`].
pub mod domain {
    pub const WEIGHTS: u64 = 1;
    pub const MAP: u64 = 2;
    pub const INIT_STATES: u64 = 3;
    pub const ACTIONS: u64 = 4;
    pub const REPLAY: u64 = 5;
    pub const EVAL: u64 = 6;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from `(master, domain, index)`.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(domain ^ splitmix64(index)))
}

/// A seeded ChaCha stream for the given `(master, domain, index)` triple.
pub fn stream(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, domain, index))
}
