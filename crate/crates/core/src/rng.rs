//! Pinned random stream used by every generator and simulation.
//!
//! All randomness flows through [`SimRng`] (ChaCha with 8 rounds, as
//! implemented by `rand_chacha`). Its output for a given seed is fixed by the
//! algorithm, not by the platform, so a `(seed, config)` pair reproduces the
//! same graph and trajectory everywhere.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Builds the pinned generator from a 64-bit seed.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform variate in `(0, 1]` with 53 bits of resolution.
///
/// Never returns zero, so `-ln(u)` is always finite and a duration built from
/// it is never infinite. `u == 1` gives a zero-length draw in the raw inverse
/// CDF; callers that need strictly positive durations guard that case.
#[inline]
pub fn unit_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives the seed of replica `index` from a base seed (splitmix64 finalizer).
pub fn replica_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
