//! Reproducible seed splitting.
//!
//! Every Monte Carlo frame draws from its own ChaCha8 stream whose seed is
//! derived from the master seed with the SplitMix64 finalizer:
//!
//! ```text
//! z = master + (index + 1) * 0x9E3779B97F4A7C15   (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! seed = z ^ (z >> 31)
//! ```
//!
//! Because substreams are addressed by index, the number of worker threads
//! never changes which numbers a frame sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `master + (index + 1)·γ`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for a two-level address such as (SNR point, frame index).
pub fn substream(master: u64, outer: u64, inner: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(split_seed(master, outer), inner))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
