//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TrialSeed = 0,
    Channel = 1,
    CsiError = 2,
    InitialPhase = 3,
    RandomPhase = 4,
}

/// ChaCha keyed by `(master, purpose, a, b)`.
///
/// The key is the concatenation of the four words, so distinct tuples give
/// distinct keys and the outputs are independent streams.
pub fn stream_rng(master: u64, purpose: Stream, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([master, purpose as u64, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Child seed for trial-level configs, drawn from a dedicated stream.
pub fn child_seed(master: u64, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    stream_rng(master, Stream::TrialSeed, a, b).next_u64()
}
