//! Counter-based randomness: every draw is a pure hash of
//! `(seed, path_index, counter)`.
//!
//! No generator state means any path can be regenerated in isolation and the
//! Monte Carlo engine is deterministic under any parallel schedule. The hash
//! chains the splitmix64 finalizer, which has full avalanche; this is a
//! simulation-grade generator, not a cryptographic one.

const GOLDEN: u64 = 0x9E3779B97F4A7C15;
const PATH_MIX: u64 = 0xA24BAED4963EE407;
const CTR_MIX: u64 = 0x9FB21C651E98DF25;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// 64 uniform bits for the given counter triple.
#[inline]
pub fn counter_hash(seed: u64, path_index: u64, counter: u64) -> u64 {
    let mut z = splitmix(seed ^ GOLDEN);
    z = splitmix(z ^ path_index.wrapping_mul(PATH_MIX));
    z = splitmix(z ^ counter.wrapping_mul(CTR_MIX));
    splitmix(z)
}

/// Standard normal draw for step `step` of path `path_index`, via Box-Muller
/// on two hashed uniforms (counters `2*step` and `2*step + 1`).
#[inline]
pub fn standard_normal(seed: u64, path_index: u64, step: u64) -> f64 {
    let z1 = counter_hash(seed, path_index, 2 * step);
    let z2 = counter_hash(seed, path_index, 2 * step + 1);
    // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
    let u1 = ((z1 >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    let u2 = (z2 >> 11) as f64 * (1.0 / 9007199254740992.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
