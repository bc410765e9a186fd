//! Seed derivation and Gaussian sampling.
//!
//! All randomness flows from a single master seed. Component streams are
//! derived with a stable FNV-1a hash over the master seed and a list of
//! string labels, so `derive_seed(master, &["om-16-0", "ga", "trial-7"])`
//! names the same stream on every platform and in every release.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hashes `master` and the labels into a child seed.
pub fn derive_seed(master: u64, labels: &[&str]) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    for label in labels {
        h = fnv1a(h, label.as_bytes());
        h = fnv1a(h, &[0x1f]); // separator so ["ab","c"] != ["a","bc"]
    }
    h
}

/// The crate-wide RNG: explicit, seedable, portable.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw from N(0, 1) via Box-Muller.
///
/// Consumes exactly two uniforms per call; no spare is cached, which keeps
/// call sites deterministic regardless of interleaving.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
