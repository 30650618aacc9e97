//! Seeded random substreams.
//!
//! Every party draws from its own ChaCha8 stream keyed by the run seed, so a
//! run is reproducible bit-for-bit on any platform and no two parties share
//! randomness.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream identifiers under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    /// Alice's private randomness M.
    Alice = 2,
    /// Bob's private randomness N.
    Bob = 3,
    /// K0, K1 and C for harness-driven trials.
    Inputs = 4,
    Attacker = 5,
    TrialSeeds = 6,
}

pub fn substream(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Attacker randomness for one run, separate per `tag` so that adding an
/// attacker to a batch leaves the others' draws unchanged.
pub fn attacker_stream(seed: u64, tag: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(Stream::Attacker as u64 | (tag + 1) << 8);
    rng
}

/// Seed of trial `index` under `base`, by random access into a dedicated
/// stream so any trial can be replayed on its own.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut rng = substream(base, Stream::TrialSeeds);
    // One u64 consumes two 32-bit words.
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}
