//! Deterministic generator streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! user seed plus a small tuple of indices (stage, pair, replicate, ...).
//! A replicate's stream therefore does not depend on scheduling, so serial
//! and parallel runs produce identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains, one per consumer of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TauPermutation = 1,
    /// Shared by both bootstrap targets so they see the same simulated data.
    Bootstrap = 2,
    Synthetic = 3,
    MonteCarlo = 4,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `(seed, stream, indices...)`.
pub fn derived_rng(seed: u64, stream: Stream, indices: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ (stream as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut mix = splitmix64(&mut state);
    for &index in indices {
        state ^= index.wrapping_add(mix);
        mix = splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = derived_rng(7, Stream::Bootstrap, &[3]).random();
        let b: u64 = derived_rng(7, Stream::Bootstrap, &[3]).random();
        let c: u64 = derived_rng(7, Stream::Bootstrap, &[4]).random();
        let d: u64 = derived_rng(7, Stream::Synthetic, &[3]).random();
        let e: u64 = derived_rng(8, Stream::Bootstrap, &[3]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(a, e);
    }

    #[test]
    fn index_order_matters() {
        let a: u64 = derived_rng(1, Stream::TauPermutation, &[1, 2]).random();
        let b: u64 = derived_rng(1, Stream::TauPermutation, &[2, 1]).random();
        assert_ne!(a, b);
    }
}
