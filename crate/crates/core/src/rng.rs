//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from the scenario seed by [`derive_seed`]. Stream ids below name
//! the sub-streams so that adding draws to one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Scenario construction: speeds, then positions, then random demand.
pub const STREAM_SCENARIO: u64 = 0;
pub const STREAM_RANDOM_POLICY: u64 = 1;
pub const STREAM_ACO: u64 = 2;
pub const STREAM_DQN: u64 = 3;
pub const STREAM_EVAL: u64 = 4;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with an index: `splitmix64(splitmix64(base) ^ index)`.
///
/// Used both for replication seeds and for solver sub-streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index)
}

pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, stream_id))
}

/// A sub-stream of a sub-stream, e.g. one ant within one colony.
pub fn substream(seed: u64, stream_id: u64, a: u64, b: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(derive_seed(derive_seed(seed, stream_id), a), b))
}
