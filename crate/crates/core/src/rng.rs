//! Seed derivation: one master seed expands into independent labeled streams,
//! so each pipeline stage (and each booth within a stage) draws from its own
//! deterministic ChaCha stream and stages can be replayed in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Derives a 32-byte sub-seed from `master` under a domain label.
pub fn derive_seed(master: &[u8], label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"veribooth/seed/v1");
    hasher.update((master.len() as u64).to_be_bytes());
    hasher.update(master);
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}

/// A seeded RNG for the stream named by `label`.
pub fn derive_rng(master: &[u8], label: &str) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(master, label))
}
