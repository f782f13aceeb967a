//! Deterministic seed derivation.
//!
//! Every random stream in the library is a ChaCha8 generator seeded from an
//! explicit u64. Sub-streams are derived by mixing tag words into the parent
//! seed with splitmix64, so the same (seed, tags) always yields the same
//! stream on every platform and thread schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a list of tag words.
pub fn mix(seed: u64, tags: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &t in tags {
        acc = splitmix64(acc ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    acc
}

/// A fresh deterministic generator for the given seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convenience: derive and open a sub-stream in one call.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    stream(mix(seed, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn mixing_is_stable() {
        // Frozen values: these must never change, or every seeded artifact
        // in the repo silently shifts.
        assert_eq!(splitmix64(0), 0xe220a8397b1dcdaf);
        assert_eq!(mix(42, &[1, 2, 3]), mix(42, &[1, 2, 3]));
        assert_ne!(mix(42, &[1, 2]), mix(42, &[2, 1]));
    }

    #[test]
    fn substreams_diverge() {
        let mut a = substream(7, &[0]);
        let mut b = substream(7, &[1]);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
