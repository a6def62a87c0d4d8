//! Named, seeded random streams.
//!
//! Every `(seed, purpose, link)` triple maps to its own ChaCha8 stream, so
//! draws on one stream never perturb another and results do not depend on
//! the order in which runs or links are evaluated.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StreamPurpose {
    Arrivals = 1,
    Channels = 2,
    DropAllowance = 3,
    Scheduler = 4,
    Verification = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub purpose: StreamPurpose,
    pub link: u32,
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, purpose: StreamPurpose, link: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((purpose as u64) << 32) | u64::from(link));
        RandomStream {
            id: StreamId { purpose, link },
            rng,
        }
    }

    /// One stream per link for the given purpose.
    pub fn per_link(seed: u64, purpose: StreamPurpose, n: usize) -> Vec<Self> {
        (0..n as u32).map(|l| Self::new(seed, purpose, l)).collect()
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on `(0, 1]`, safe to take the logarithm of.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard exponential variate.
    pub fn exp1(&mut self) -> f64 {
        -self.uniform_open0().ln()
    }

    /// Standard Gumbel variate.
    pub fn gumbel(&mut self) -> f64 {
        -self.exp1().ln()
    }

    /// Uniform integer on `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
