//! Seeded random number generation.
//!
//! Every stochastic routine takes an explicit [`Rng`]. The generator is
//! ChaCha8 (`rand_chacha`), whose output stream is fixed by its published
//! algorithm and independent of platform word size or endianness, so equal
//! seeds reproduce bit-identical datasets and models everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::nncore::Matrix;

pub type Rng = ChaCha8Rng;

/// Generator for a 64-bit seed.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream tag using the SplitMix64 finalizer, so
/// sub-streams (per fold, per iteration, per role) never collide with
/// `base + small integer` seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix of independent standard normal draws.
pub fn standard_normal(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut Rng) {
    use rand::seq::SliceRandom;
    items.shuffle(rng);
}
