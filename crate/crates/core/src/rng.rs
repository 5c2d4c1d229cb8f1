//! Counter-based random streams.
//!
//! Every unit of Monte-Carlo work draws from its own ChaCha stream keyed by
//! `(seed, purpose, index)`, so results do not depend on how work is spread
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for work item `index` of the given `purpose`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed ^ splitmix64(purpose));
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A child seed, for APIs that take a seed rather than a stream.
pub fn derive_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose)) ^ splitmix64(index.wrapping_add(1)))
}

/// Stable 64-bit tag for a textual purpose label.
pub fn purpose(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3))
}
