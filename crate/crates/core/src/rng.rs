//! Seeded random streams.
//!
//! Every stochastic step in the crate draws from a [`ChaCha8Rng`] derived from
//! a 64-bit seed. Per-record streams are derived as `seed ^ record_id`, so work
//! can be split across threads without changing the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Default seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_190_905;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one record.
pub fn record_stream(seed: u64, record_id: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed ^ record_id)
}

/// Stream for a named sub-task (e.g. "split", "mixup") under a base seed.
pub fn labeled_stream(seed: u64, label: &str) -> Stream {
    // FNV-1a over the label keeps derivation stable across platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}
