//! Deterministic random streams.
//!
//! Every simulation draws from ChaCha8 generators. Independent streams are
//! derived from one master seed as `splitmix64(splitmix64(master) ^ stream)`,
//! so results do not depend on how work is scheduled across threads. The
//! inner mix matters: with a bare `master ^ stream`, small masters only
//! permute the stream indices and every run of N streams sees the same N
//! generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

/// Means above this are sampled from a rounded Gaussian with matched moments.
pub const GAUSSIAN_POISSON_THRESHOLD: f64 = 1e6;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, stream: u64) -> u64 {
    mix64(mix64(master) ^ stream)
}

pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, stream))
}

/// Poisson draw with the given mean. Zero or negative means give zero.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean > GAUSSIAN_POISSON_THRESHOLD {
        let normal = Normal::new(mean, mean.sqrt()).expect("finite positive mean");
        return normal.sample(rng).round().max(0.0) as u64;
    }
    let dist = Poisson::new(mean).expect("finite positive mean");
    dist.sample(rng) as u64
}
