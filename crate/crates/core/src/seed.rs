//! Deterministic seed derivation. Every random stream in the pipeline is a
//! ChaCha generator keyed by a hash of the run seed and a stable label, so
//! results do not depend on thread scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Hash a run seed together with labelled parts into a 64-bit sub-seed.
pub fn derive_seed(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for one paragraph: keyed by `(seed, doc_id, para_index)`.
pub fn paragraph_rng(seed: u64, doc_id: &str, para_index: usize) -> Rng {
    let idx = (para_index as u64).to_le_bytes();
    rng_from_seed(derive_seed(seed, &[b"paragraph", doc_id.as_bytes(), &idx]))
}
