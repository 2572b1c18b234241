//! Seed splitting for reproducible, order-independent simulation.
//!
//! Every random draw comes from a ChaCha8 stream addressed by
//! `(key, purpose, sample index)`:
//!
//! * `key` is the dataset seed. Monte Carlo replication `r` under master
//!   seed `m` uses `key = splitmix64(m ^ splitmix64(r))`.
//! * `purpose` selects one of ChaCha's 2^64 streams, so covariates,
//!   treatments and noise never share randomness.
//! * the sample index selects a disjoint window of 2^20 words inside the
//!   stream, so sample `i` receives the same draws whatever order samples
//!   are generated in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved per sample inside a stream, as a shift.
const SAMPLE_WINDOW_BITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Covariates = 1,
    Treatment = 2,
    Noise = 3,
    Coefficients = 4,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dataset seed for replication `replication` of a run seeded with `master`.
pub fn replication_seed(master: u64, replication: u64) -> u64 {
    splitmix64(master ^ splitmix64(replication))
}

/// Positionable generator for one purpose under one key.
#[derive(Debug, Clone)]
pub struct SampleStreams {
    base: ChaCha8Rng,
}

impl SampleStreams {
    pub fn new(key: u64, purpose: StreamPurpose) -> Self {
        let mut base = ChaCha8Rng::seed_from_u64(key);
        base.set_stream(purpose as u64);
        Self { base }
    }

    /// Generator positioned at the window of sample `index`.
    pub fn for_sample(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos(u128::from(index) << SAMPLE_WINDOW_BITS);
        rng
    }

    /// Generator at the start of the stream, for sequential use.
    pub fn sequential(&self) -> ChaCha8Rng {
        self.for_sample(0)
    }
}
