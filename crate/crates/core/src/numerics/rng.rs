use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic, platform-independent random stream (ChaCha8).
///
/// Single owner; move it into a worker rather than sharing it.
#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

/// Creates the stream for `seed`. Equal seeds give equal sequences everywhere.
pub fn seeded_rng(seed: u64) -> RandomStream {
    RandomStream {
        inner: ChaCha8Rng::seed_from_u64(seed),
    }
}

impl RandomStream {
    /// Independent sub-stream `index` of `seed`, used for sharded sampling.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index.wrapping_add(1));
        Self { inner }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
