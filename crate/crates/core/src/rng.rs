//! Deterministic RNG substreams.
//!
//! Every random decision draws from a ChaCha8 stream keyed by
//! `(run seed, stage, timestep, key)`, so the order in which actors or posts
//! are processed (sequentially or on a thread pool) never changes a draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Pipeline stage a substream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Activation = 1,
    Interaction = 2,
    Content = 3,
    Rando = 4,
    Ids = 5,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// FNV-1a, used to turn string ids into stream keys.
pub fn key_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn substream(seed: u64, stage: Stage, t: u32, key: u64) -> SimRng {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ stage as u64);
    h = splitmix64(h ^ t as u64);
    h = splitmix64(h ^ key);
    ChaCha8Rng::seed_from_u64(h)
}
