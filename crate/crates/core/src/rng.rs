//! Keyed random streams.
//!
//! Every sampler in the crate is a pure function of `(seed, parameters)`.
//! Sequential streams are ChaCha8 generators whose key is derived from the
//! user seed and a list of integer tags (replica index, level, ...). The
//! hierarchical field additionally needs one Gaussian per `(level, cell)`
//! that does not depend on the order cells are visited; [`CounterRng`]
//! provides that by hashing the counter instead of advancing a state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a seed and a tag path into a 64-bit key.
pub fn derive_key(seed: u64, tags: &[u64]) -> u64 {
    let mut k = mix64(seed ^ GOLDEN);
    for (i, &t) in tags.iter().enumerate() {
        k = mix64(k ^ mix64(t.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))));
    }
    k
}

/// A ChaCha8 stream keyed by `(seed, tags)`.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let key = derive_key(seed, tags);
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&mix64(key.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Counter-based generator: word `i` of counter `c` under key `k` is
/// `mix64(mix64(k ^ mix64(c)) + i * GOLDEN)`. Independent counters never share
/// state, so values can be produced in any order.
#[derive(Debug, Clone)]
pub struct CounterRng {
    base: u64,
    draw: u64,
}

impl CounterRng {
    pub fn new(key: u64, counter: u64) -> Self {
        Self { base: mix64(key ^ mix64(counter ^ GOLDEN)), draw: 0 }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.draw += 1;
        mix64(self.base.wrapping_add(self.draw.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

/// Standard normal attached to `(key, counter)`.
#[inline]
pub fn keyed_normal(key: u64, counter: u64) -> f64 {
    StandardNormal.sample(&mut CounterRng::new(key, counter))
}
