//! Deterministic seed derivation.
//!
//! Every randomized step draws from a generator seeded per work item so that
//! results do not depend on scheduling or processing order. The derivation is
//! a plain FNV-1a over the global seed and the item's identifying parts; the
//! ChaCha generator downstream takes care of diffusion.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Derives a stable sub-seed from a global seed and identifying parts.
pub fn derive_seed(global: u64, parts: &[&[u8]]) -> u64 {
    let mut hash = FNV_OFFSET;
    for byte in global.to_le_bytes() {
        hash = (hash ^ u64::from(byte)).wrapping_mul(FNV_PRIME);
    }
    for part in parts {
        // Length-prefix each part so ("ab","c") and ("a","bc") differ.
        for byte in (part.len() as u64).to_le_bytes() {
            hash = (hash ^ u64::from(byte)).wrapping_mul(FNV_PRIME);
        }
        for &byte in *part {
            hash = (hash ^ u64::from(byte)).wrapping_mul(FNV_PRIME);
        }
    }
    hash
}

/// Generator seeded from [`derive_seed`] parts.
pub fn rng_for(global: u64, parts: &[&[u8]]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, parts))
}
