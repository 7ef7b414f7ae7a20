//! Counter-based, splittable random streams.
//!
//! A [`StreamKey`] names a position in a tree of independent streams, e.g.
//! `(master seed) → trial index → window index`. Each key turns into a
//! ChaCha8 generator whose output depends only on the key, so results do not
//! depend on the order or thread in which streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    words: [u64; 4],
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        let mut words = [0u64; 4];
        let mut state = seed;
        for w in &mut words {
            state = splitmix64(state);
            *w = state;
        }
        Self { words }
    }

    /// The key of child stream `index`.
    pub fn child(&self, index: u64) -> Self {
        let tag = splitmix64(index ^ 0xA076_1D64_78BD_642F);
        let mut words = self.words;
        for (i, w) in words.iter_mut().enumerate() {
            *w = splitmix64(*w ^ tag.rotate_left(16 * i as u32));
        }
        Self { words }
    }

    /// Convenience for a path of child indices.
    pub fn path(&self, indices: &[u64]) -> Self {
        indices.iter().fold(*self, |k, &i| k.child(i))
    }

    /// A 64-bit seed summarizing this key.
    pub fn seed(&self) -> u64 {
        self.words.iter().fold(0u64, |acc, &w| splitmix64(acc ^ w))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        for (chunk, w) in bytes.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}
