//! Seeded generator streams.
//!
//! Every consumer derives a ChaCha8 generator from `(seed, stream)`. Streams
//! are independent counters of the same key, so episode `i` can be replayed
//! alone without generating episodes `0..i` first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SomRng = ChaCha8Rng;

/// Fixed seed used when the caller does not provide one.
pub const DEFAULT_SEED: u64 = 42;

pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_SHUFFLE: u64 = 1;
pub(crate) const STREAM_DATA: u64 = 2;

/// Generator for stream `stream` of key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SomRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for few-shot episode `run_index`.
///
/// Episode keys are derived from the seed so they never collide with the
/// fixed streams used by initialization and shuffling.
pub fn episode_rng(seed: u64, run_index: u64) -> SomRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    rng.set_stream(run_index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 3).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream_rng(7, 3).random()).collect();
        assert_eq!(a, b);
        let x: u64 = stream_rng(7, 3).random();
        let y: u64 = stream_rng(7, 4).random();
        assert_ne!(x, y);
    }

    #[test]
    fn episode_streams_do_not_depend_on_order() {
        let mut late = episode_rng(1, 99);
        let first: u64 = late.random();
        for i in 0..99 {
            let _: u64 = episode_rng(1, i).random();
        }
        assert_eq!(episode_rng(1, 99).random::<u64>(), first);
    }
}
