//! Counter-based noise streams.
//!
//! A stream is a ChaCha8 keystream keyed by a 64-bit seed and selected by a
//! 64-bit stream id. Replicate `i` of a run seeded with `seed` reads stream
//! `i`; the independent second sample set of the two-phase estimator reads
//! stream `i | FRESH_STREAM_BIT`. Because ChaCha is a counter-mode generator,
//! every substream is reproducible regardless of the order replicates run in.
//! Gaussian variates are obtained by inverting the normal CDF on uniforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::normal::norm_inv_cdf;

pub const FRESH_STREAM_BIT: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    /// Stream for replicate `index` of a run with base `seed`.
    pub fn for_replicate(seed: u64, index: u64) -> Self {
        Self::new(seed, index & !FRESH_STREAM_BIT)
    }

    /// An independent stream for the fresh sample set paired with this one.
    pub fn fresh(&self) -> Self {
        Self::new(self.seed, self.stream | FRESH_STREAM_BIT)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        norm_inv_cdf(self.next_uniform())
    }

    /// Standard exponential variate by inversion.
    pub fn next_exponential(&mut self) -> f64 {
        -self.next_uniform().ln()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.next_normal();
        }
    }
}
