//! Deterministic seed derivation.
//!
//! Every parallel task (a walk batch for one node, one sampling round for one
//! class pair) draws from its own generator seeded by mixing the base seed
//! with the task coordinates, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a list of task coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn task_rng(base: u64, parts: &[u64]) -> TaskRng {
    TaskRng::seed_from_u64(derive_seed(base, parts))
}

// Stream tags keep independent stages of one run from sharing random streams.
pub(crate) const STREAM_PRIORS: u64 = 1;
pub(crate) const STREAM_TEST: u64 = 2;
pub(crate) const STREAM_WALKS: u64 = 3;
pub(crate) const STREAM_SVD: u64 = 4;
