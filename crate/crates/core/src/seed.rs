//! Seed derivation. Every random component draws from a ChaCha8 stream keyed
//! by the run seed and a component-specific stream id, so results do not
//! depend on the order in which components run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids for the pipeline stages.
pub mod stream {
    pub const GRAPH: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const TARGETS: u64 = 3;
    pub const ATTACK: u64 = 4;
    pub const RETRAIN: u64 = 5;
    pub const DETECT: u64 = 6;
    pub const POPULATION: u64 = 7;
    pub const CONTROL: u64 = 8;
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A fresh 64-bit seed derived from `(seed, stream)`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    rng(seed, stream).next_u64()
}

/// RNG for the walks that update neighbor `u` of center `v`.
pub fn neighbor_rng(seed: u64, center: usize, neighbor: usize) -> ChaCha8Rng {
    let stream = ((center as u64) << 32) ^ (neighbor as u64);
    rng(derive(seed, stream::DETECT), stream)
}
