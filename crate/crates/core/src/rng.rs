//! Reproducible random streams.
//!
//! Every path is drawn from a ChaCha8 generator keyed by a 64-bit seed and a
//! 64-bit stream id (`rand_chacha::ChaCha8Rng::set_stream`). Distinct stream
//! ids give independent, non-overlapping keystreams, so work can be split
//! across threads by stream id without changing any drawn value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngConfig {
    pub seed: u64,
    pub stream: u64,
}

impl RngConfig {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngConfig { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Same seed, another stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        RngConfig { seed: self.seed, stream }
    }

    /// A seed for an independent family of streams, e.g. one per experiment arm.
    pub fn derive(&self, tag: u64) -> Self {
        RngConfig {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15))),
            stream: self.stream,
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
