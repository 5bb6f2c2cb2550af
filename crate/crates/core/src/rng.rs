//! Seeded substreams, batch-parallel sampling and running moments.
//!
//! Every Monte Carlo estimate in the crate is split into fixed-size batches.
//! Batch `i` draws from ChaCha8 stream `i` of the caller's seed, and batch
//! results are merged in index order, so an estimate depends only on
//! `(seed, budget)` and never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

/// Samples per batch.
pub const BATCH: usize = 4096;

/// RNG for stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser; used to derive child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the `index`-th unit of work labelled `tag`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = mix64(seed);
    for b in tag.bytes() {
        h = mix64(h ^ u64::from(b));
    }
    mix64(h ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Running mean/variance (Welford), mergeable with Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Welford) -> Welford {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        let mean = self.mean + delta * other.count as f64 / nf;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / nf;
        Welford { count: n, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Batch sizes covering `budget` samples.
pub fn batch_sizes(budget: usize) -> Vec<usize> {
    let full = budget / BATCH;
    let rem = budget % BATCH;
    let mut sizes = vec![BATCH; full];
    if rem > 0 {
        sizes.push(rem);
    }
    sizes
}

/// Runs `work(rng, size)` for every batch in parallel and returns the batch
/// results in batch order.
pub fn map_batches<T, F>(budget: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng, usize) -> T + Sync,
{
    batch_sizes(budget)
        .into_par_iter()
        .enumerate()
        .map(|(i, size)| {
            let mut rng = substream(seed, i as u64);
            work(&mut rng, size)
        })
        .collect()
}

/// Convenience wrapper around [`map_batches`] for a single scalar statistic.
pub fn welford_batches<F>(budget: usize, seed: u64, sample: F) -> Welford
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    map_batches(budget, seed, |rng, size| {
        let mut w = Welford::new();
        for _ in 0..size {
            w.push(sample(rng));
        }
        w
    })
    .iter()
    .fold(Welford::new(), |acc, w| acc.merge(w))
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = f64::from(base);
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % u64::from(base)) as f64 * inv;
        index /= u64::from(base);
        inv /= b;
    }
    out
}

/// The `index`-th Halton point in `[0,1)^dim` (dim ≤ 12), skipping index 0.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton: dimension {dim} too large");
    (0..dim)
        .map(|k| radical_inverse(index as u64 + 1, PRIMES[k]))
        .collect()
}
