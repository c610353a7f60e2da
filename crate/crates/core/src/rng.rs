//! Reproducible random streams.
//!
//! Every trial (or any other unit of work) gets its own ChaCha8 stream keyed by the
//! run seed and selected by the unit's index. The stream for index `k` is a pure
//! function of `(seed, k)`, so results never depend on how work is split across
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Independent stream number `index` under the key derived from `seed`.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
