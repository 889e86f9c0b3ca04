//! Seed plumbing: every parallel task draws from its own ChaCha stream, keyed
//! by a stable hash of `(master seed, task index)`, so results never depend
//! on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of stream `index` under `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    mix(mix(master ^ 0x6d69_652d_6c61_6221).wrapping_add(mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

pub fn stream(master: u64, index: u64) -> Rng {
    Rng::seed_from_u64(stream_seed(master, index))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
