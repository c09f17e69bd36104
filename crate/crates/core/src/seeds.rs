//! Counter-based seed derivation for reproducible parallel Monte Carlo.

use sha2::{Digest, Sha256};

/// Derives an independent 64-bit seed from a base seed, a label and integer coordinates.
///
/// The result only depends on its arguments, so replicas can be generated in
/// any order or in parallel without changing their values.
pub fn derive_seed(base: u64, label: &str, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"lfpp/seed/v1");
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(base.to_le_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
