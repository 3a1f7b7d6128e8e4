//! Deterministic random-stream derivation.
//!
//! Every randomized component draws from its own ChaCha stream derived from
//! `(master seed, purpose label, index)`. Streams never share state, so the
//! order in which concurrent workers finish can never change a result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for the sub-stream `(master, label, index)`.
///
/// Also used by the CLI to derive per-run seeds from
/// `(master seed, strategy name, run index)`: adding a strategy to an
/// experiment does not perturb the seeds of the others.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mixed_label = splitmix64(fnv1a(label.as_bytes()));
    let mixed_index = splitmix64(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    splitmix64(master ^ mixed_label ^ mixed_index)
}

/// Deterministic generator for the sub-stream `(master, label, index)`.
pub fn stream(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, index))
}
