//! Seed management: one master seed fans out to independent named streams so
//! each component (data, latents, augmentation, protocol, ...) is
//! reproducible on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives per-component RNG streams from a master seed.
#[derive(Clone, Debug)]
pub struct SeedFanout {
    master: u64,
}

impl SeedFanout {
    pub fn new(master: u64) -> Self {
        SeedFanout { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// A fresh deterministic stream for `name`.
    pub fn stream(&self, name: &str) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master.to_le_bytes());
        hasher.update(name.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest[..32]);
        ChaCha8Rng::from_seed(seed)
    }

    /// Stream further namespaced by an index (e.g. per run or per worker).
    pub fn substream(&self, name: &str, index: u64) -> ChaCha8Rng {
        self.stream(&format!("{name}/{index}"))
    }
}

/// Snapshot of a ChaCha stream position for checkpointing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_word_pos(self.word_pos);
        rng
    }
}
