//! Fan-out of one top-level seed into independent named sub-seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a sub-seed from `seed` and a label. Stable across platforms and
/// releases; changing it changes every seeded artifact.
pub fn derive(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the parent seed through splitmix64.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(hash))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named sub-seeds used by the pipeline.
pub mod label {
    pub const FOLDS: &str = "folds";
    pub const SAMPLING: &str = "sampling";
    pub const EVAL_SAMPLING: &str = "eval-sampling";
    pub const SHUFFLE: &str = "shuffle";
    pub const TRAINING: &str = "training";
}
