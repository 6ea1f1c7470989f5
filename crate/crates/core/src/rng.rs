//! Seeded randomness.
//!
//! Every random draw in the crate comes from a ChaCha8 keystream addressed by
//! `(seed, stream, word position)`. Because the keystream is counter-based,
//! any pixel's draw can be regenerated directly from its index, which lets
//! rows be generated in parallel without changing the result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stream identifiers. Distinct purposes never share keystream words.
pub mod streams {
    pub const SPECKLE: u64 = 1;
    pub const EDIT_PARAMS: u64 = 2;
    pub const GLOBAL_NOISE: u64 = 3;
    pub const SPLICE_DRAWS: u64 = 4;
    pub const SCENE: u64 = 5;
}

/// A keyed, addressable random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Sequential generator starting at the beginning of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Generator positioned at the `index`-th 64-bit word of the stream.
    pub fn rng_at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(u128::from(index) * 2);
        rng
    }
}

/// Uniform on `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stable 64-bit seed derived from a master seed, an item id and a stage
/// name. Independent of platform, thread count and execution order.
pub fn derive_seed(master_seed: u64, item_id: &str, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((item_id.len() as u64).to_le_bytes());
    h.update(item_id.as_bytes());
    h.update((stage.len() as u64).to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
