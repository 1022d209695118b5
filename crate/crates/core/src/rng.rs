//! Seeded random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from the run
//! seed plus a tuple of integer keys (purpose, epoch, node, pair, ...). No
//! stream is shared between two consumers, so reordering or parallelising
//! the consumers cannot change what any of them draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes. Values are part of the reproducibility contract.
pub mod purpose {
    pub const INIT: u64 = 1;
    pub const NODE_LABEL: u64 = 2;
    pub const LABEL_LABEL: u64 = 3;
    pub const SUBSAMPLE: u64 = 4;
    pub const SYNTHETIC: u64 = 5;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Builds the stream for `seed` and `keys`.
pub fn keyed(seed: u64, keys: &[u64]) -> StreamRng {
    let mut h = splitmix64(seed);
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k));
    }
    ChaCha8Rng::seed_from_u64(h)
}
