//! Random stream construction.
//!
//! Every replication owns an independent ChaCha8 stream whose seed is a pure
//! function of `(master_seed, replication_index)`. The mixing function is the
//! SplitMix64 finalizer applied to `master_seed ^ golden * (index + 1)`, so
//! results never depend on thread scheduling or on the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all simulation work.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master_seed`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)))
}

/// Random stream for replication `index`.
pub fn replication_rng(master_seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master_seed, index))
}

/// A uniform draw on (0, 1], suitable for inverse-transform sampling of tails.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
