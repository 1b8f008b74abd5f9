//! Portable, seedable random streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha::ChaCha8Rng`, 256-bit
//! key, 64-bit block counter). ChaCha output is specified bit-for-bit, so a
//! given key yields the same sequence on every platform.
//!
//! Keys are derived from an experiment seed and a list of labels:
//!
//! ```text
//! h  = splitmix64(seed)
//! for each label:  h = splitmix64(h ^ fnv1a64(label))    (integers are
//!                                                         hashed as their
//!                                                         decimal text)
//! key[8i..8i+8] = splitmix64(h + i) as little-endian bytes, i = 0..4
//! ```
//!
//! Floats are drawn as `(next_u64 >> 11) * 2^-53` and bounded integers by
//! rejection sampling on the top bits, so neither depends on `rand`'s
//! distribution code.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// A component of a stream derivation path.
#[derive(Debug, Clone, Copy)]
pub enum StreamKey<'a> {
    Label(&'a str),
    Index(u64),
}

impl<'a> From<&'a str> for StreamKey<'a> {
    fn from(s: &'a str) -> Self {
        StreamKey::Label(s)
    }
}

impl From<u64> for StreamKey<'_> {
    fn from(i: u64) -> Self {
        StreamKey::Index(i)
    }
}

impl From<usize> for StreamKey<'_> {
    fn from(i: usize) -> Self {
        StreamKey::Index(i as u64)
    }
}

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Stream keyed directly by a 64-bit seed.
    pub fn from_seed(seed: u64) -> Self {
        Self::derive(seed, &[])
    }

    /// Stream keyed by `(seed, path...)`.
    pub fn derive(seed: u64, path: &[StreamKey<'_>]) -> Self {
        let mut h = splitmix64(seed);
        for key in path {
            let part = match key {
                StreamKey::Label(s) => fnv1a64(s.as_bytes()),
                StreamKey::Index(i) => fnv1a64(i.to_string().as_bytes()),
            };
            h = splitmix64(h ^ part);
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(h.wrapping_add(i as u64)).to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Child stream keyed by this stream's next output and `label`.
    pub fn fork(&mut self, label: &str) -> Self {
        let s = self.next_u64();
        Self::derive(s, &[StreamKey::Label(label)])
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        if n.is_power_of_two() {
            return self.next_u64() & (n - 1);
        }
        let bits = 64 - (n - 1).leading_zeros();
        loop {
            let x = self.next_u64() >> (64 - bits);
            if x < n {
                return x;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::derive(7, &["cora".into(), 3u64.into()]);
        let mut b = RngStream::derive(7, &["cora".into(), 3u64.into()]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn paths_are_distinct() {
        let mut a = RngStream::derive(7, &[1u64.into(), 2u64.into()]);
        let mut b = RngStream::derive(7, &[2u64.into(), 1u64.into()]);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn known_first_outputs() {
        // Frozen to catch accidental changes to the derivation.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(fnv1a64(b""), FNV_OFFSET);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn uniform_in_range_and_below_is_unbiased_enough() {
        let mut r = RngStream::from_seed(1);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            counts[r.below(3) as usize] += 1;
        }
        for c in counts {
            assert!((9_500..10_500).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = RngStream::from_seed(5);
        let mut v: Vec<usize> = (0..50).collect();
        r.shuffle(&mut v);
        let mut s = v.clone();
        s.sort_unstable();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        assert_ne!(v, s);
    }
}
