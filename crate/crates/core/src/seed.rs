//! Deterministic seeding. Every random stream is a PCG generator keyed by a
//! 64-bit seed; per-trial seeds are derived from a master seed with a
//! splitmix64 mix so that results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub type Rng = Pcg64Mcg;

/// One splitmix64 finalisation round.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent substream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Pcg64Mcg::seed_from_u64(seed)
}

/// Generator for substream `index` of `master`.
pub fn substream(master: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(master, index))
}
