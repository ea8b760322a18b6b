//! Reproducible random-number streams.
//!
//! All randomness in the crate flows from a single root seed through labeled
//! derivation: a stage name selects a 256-bit ChaCha key, and each sample gets
//! its own counter-based stream. Results are therefore bitwise reproducible
//! under any parallel schedule — worker threads never share an RNG.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derives a 256-bit ChaCha key from a root seed and a stage label.
fn derive_key(root_seed: u64, label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(root_seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}

/// RNG for a whole stage (single stream).
pub fn stage_rng(root_seed: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(root_seed, label))
}

/// RNG for one sample within a stage. Streams with distinct
/// `(root_seed, label, sample_index)` never overlap.
pub fn sample_rng(root_seed: u64, label: &str, sample_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(derive_key(root_seed, label));
    rng.set_stream(sample_index);
    rng
}
