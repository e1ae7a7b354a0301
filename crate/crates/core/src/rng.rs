//! Deterministic random streams.
//!
//! A master seed is split into named sub-streams so that changing how much
//! randomness one stage consumes never perturbs another stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive a sub-seed from a master seed, a stream name and a list of indices.
pub fn derive_seed(master: u64, stream: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for b in stream.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

pub fn stream(master: u64, name: &str, indices: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, name, indices))
}
