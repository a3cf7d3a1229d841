//! Keyed random streams.
//!
//! Every random quantity in the crate is a pure function of a master seed and
//! an integer key, so results never depend on call order or thread schedule.
//! Keys are ChaCha8 stream ids: the uniform used for the coupled step out of
//! time `t` is the first word of stream `t` (negative `t` for the backward
//! pass, positive `t` for forward continuation).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform in `[0, 1)` keyed by `(seed, t)`.
pub fn keyed_uniform(seed: u64, t: i64) -> f64 {
    let word = stream_rng(seed, t as u64).next_u64();
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Child seed for the `index`-th independent run under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // Stream ids from the top of the range never collide with time keys.
    stream_rng(seed, u64::MAX - index).next_u64()
}
