//! Splittable random streams.
//!
//! Every unit of parallel work owns a ChaCha stream keyed by
//! `(master_seed, stream_index)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream index reserved for bootstrap resampling.
pub const BOOTSTRAP_STREAM: u64 = u64::MAX - 1;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
