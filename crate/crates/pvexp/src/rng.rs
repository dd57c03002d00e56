//! Deterministic per-path random streams.
//!
//! Path `i` of an experiment with base seed `s` draws from the ChaCha8
//! stream `(s, namespace << 56 | i)`, so its randomness never depends on
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Driving noise of the `Z_n` comparison ensemble.
pub const NS_Z: u8 = 1;
/// Driving noise of the expansion ensemble; disjoint from [`NS_Z`].
pub const NS_EXPANSION: u8 = 2;
/// Order verification paths.
pub const NS_ORDER: u8 = 3;
/// Bootstrap resampling.
pub const NS_BOOTSTRAP: u8 = 4;
/// Oracle self-checks.
pub const NS_CHECK: u8 = 5;
/// Standalone samples.
pub const NS_SAMPLE: u8 = 6;

const INDEX_MASK: u64 = (1 << 56) - 1;

pub fn substream(seed: u64, namespace: u8, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(namespace) << 56 | (index & INDEX_MASK));
    rng
}
