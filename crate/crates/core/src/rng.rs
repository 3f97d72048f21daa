//! Reproducible random number streams.
//!
//! All randomness comes from ChaCha8, a counter-mode stream cipher. A stream
//! is addressed by (root seed, purpose tag, replica index): the 32-byte key is
//! SHA-256 of a domain separator, the root seed and the purpose tag, and the
//! replica index selects the ChaCha stream. Replicas of an ensemble are
//! therefore independent, reproducible and order-insensitive, so they can run
//! on any number of workers without changing a single output byte.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"hydro.rng.v1";

/// RNG stream for (root seed, purpose, replica).
pub fn stream(root_seed: u64, purpose: &str, replica: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(root_seed.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica);
    rng
}
