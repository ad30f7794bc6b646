//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the user seed, with the
//! 64-bit ChaCha stream id set to the replicate index. Streams with distinct
//! indices are independent, and a replicate's stream does not depend on how
//! many other replicates run or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream `index` of the generator family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
