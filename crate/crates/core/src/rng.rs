//! Seeded randomness. Every randomized operation takes an explicit [`RngSeed`];
//! there is no global generator.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// 64-bit seed for the ChaCha20 counter-mode generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    /// Child seed for a coordinate tuple, e.g. `(method, budget, trial)`.
    /// The derivation depends only on the inputs, so the schedule of cells
    /// cannot change the stream a cell sees.
    pub fn derive(self, coords: &[u64]) -> RngSeed {
        let mut h = Sha256::new();
        h.update(self.0.to_le_bytes());
        for c in coords {
            h.update(c.to_le_bytes());
        }
        let out = h.finalize();
        let mut b = [0u8; 8];
        b.copy_from_slice(&out[..8]);
        RngSeed(u64::from_le_bytes(b))
    }
}

impl Default for RngSeed {
    fn default() -> Self {
        RngSeed(0)
    }
}
