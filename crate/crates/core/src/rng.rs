//! Seed derivation and per-trial random substreams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by a 64-bit seed
//! and positioned on a numbered stream, so trial `k` of a batch sees the same
//! numbers no matter which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in output metadata.
pub const RNG_NAME: &str = "chacha8-stream-v1";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for a position (e.g. sweep cell indices) under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &i| {
        splitmix64(acc ^ splitmix64(i))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Reference,
    Signal(u64),
    TrialReference(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Reference => 0,
            Stream::Signal(k) => 2 * k + 1,
            Stream::TrialReference(k) => 2 * k + 2,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
