//! Seed derivation and deterministic RNG construction.
//!
//! Every stochastic code path in the crate draws from a `ChaCha8Rng`
//! seeded through [`derive_seed`], so a base seed plus a stream id
//! fully determines the stream. Stream ids are small constants chosen
//! per call site; mixing keeps unrelated streams decorrelated even
//! when base seeds are consecutive integers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a stream id.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream))
}

/// Deterministic RNG for (base, stream).
pub fn rng_from(base: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_deterministic_and_stream_sensitive() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn rng_from_reproduces_streams() {
        let mut a = rng_from(42, 1);
        let mut b = rng_from(42, 1);
        for _ in 0..16 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }
}
