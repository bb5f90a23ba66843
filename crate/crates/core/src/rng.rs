//! Seeded random streams.
//!
//! Every replication of a simulation draws from its own ChaCha8 stream:
//! the key is derived from the master seed with `seed_from_u64` and the
//! 64-bit stream id is the replication index. Replication r therefore sees
//! the same numbers however the work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the family keyed by `master_seed`.
pub fn substream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
