//! Per-replication random streams.
//!
//! Each replication draws from its own ChaCha stream, addressed by
//! `(master_seed, index)`, so results do not depend on which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream `index` of the family keyed by `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
