//! Counter-based random streams.
//!
//! Every random quantity in the crate is addressed by `(seed, stream, index)`:
//! a ChaCha8 key derived from the seed, one ChaCha stream per logical stream
//! id, and the position inside that stream. Work can therefore be split across
//! threads in any order without changing a single draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Logical consumers of randomness. Each gets an independent key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Noise,
    Stage1Multipliers,
    Stage2Multipliers,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Noise => 0x6e6f_6973_6500_0001,
            Domain::Stage1Multipliers => 0x6d75_6c74_0000_0001,
            Domain::Stage2Multipliers => 0x6d75_6c74_0000_0002,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key for a domain, derived from the user seed.
pub fn derive_seed(seed: u64, domain: Domain) -> u64 {
    mix64(seed ^ domain.tag())
}

/// Generator positioned at the start of `stream` under `key`.
pub fn stream_rng(key: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// Fills `out` with the first `out.len()` standard normals of a stream.
pub fn fill_standard_normal(key: u64, stream: u64, out: &mut [f64]) {
    let mut rng = stream_rng(key, stream);
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}
