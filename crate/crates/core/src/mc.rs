//! Replication driver for Monte Carlo estimators.
//!
//! Every replication `i` draws from its own ChaCha8 stream keyed by
//! `(seed, i)`. Replications are grouped into fixed-size batches that are
//! folded sequentially and merged in index order, so results are identical
//! for any worker count and for either executor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Replications per batch. Part of the determinism contract: changing it
/// changes floating-point summation order.
pub const BATCH_SIZE: usize = 1024;

/// Random stream for replication `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive an independent seed for a sub-experiment (grid point, criterion).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Executor {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Executor::Parallel;
        #[cfg(not(feature = "parallel"))]
        return Executor::Sequential;
    }
}

/// Seed, replication count and executor for one estimator call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub seed: u64,
    pub n: usize,
    pub executor: Executor,
}

impl MonteCarlo {
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            executor: Executor::default(),
        }
    }

    pub fn sequential(mut self) -> Self {
        self.executor = Executor::Sequential;
        self
    }

    pub fn with_executor(mut self, executor: Executor) -> Self {
        self.executor = executor;
        self
    }

    /// Same executor and count, independent streams.
    pub fn reseeded(&self, salt: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, salt),
            ..*self
        }
    }

    /// Fold replications into per-batch accumulators, returned in batch order.
    ///
    /// `step` receives the accumulator, the replication index and that
    /// replication's stream.
    pub fn fold_batches<A, I, S>(&self, init: I, step: S) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        S: Fn(&mut A, u64, &mut StreamRng) + Sync,
    {
        let batches = self.n.div_ceil(BATCH_SIZE);
        let run = |b: usize| {
            let mut acc = init();
            let lo = b * BATCH_SIZE;
            let hi = ((b + 1) * BATCH_SIZE).min(self.n);
            for i in lo..hi {
                let mut rng = stream(self.seed, i as u64);
                step(&mut acc, i as u64, &mut rng);
            }
            acc
        };
        match self.executor {
            Executor::Sequential => (0..batches).map(run).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel => (0..batches).into_par_iter().map(run).collect(),
        }
    }

    /// Per-replication results in index order.
    pub fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, &mut StreamRng) -> T + Sync,
    {
        self.fold_batches(Vec::new, |acc, i, rng| acc.push(f(i, rng)))
            .into_iter()
            .flatten()
            .collect()
    }

    /// Fold, then merge batch accumulators left to right.
    pub fn fold<A, I, S, M>(&self, init: I, step: S, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        S: Fn(&mut A, u64, &mut StreamRng) + Sync,
        M: Fn(&mut A, A),
    {
        let mut total = init();
        for part in self.fold_batches(&init, step) {
            merge(&mut total, part);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream(7, 0).random();
        let b: u64 = stream(7, 1).random();
        let a2: u64 = stream(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn fold_covers_every_index_once() {
        let mc = MonteCarlo::new(1, 3 * BATCH_SIZE + 17);
        let idx = mc.map(|i, _| i);
        assert_eq!(idx, (0..mc.n as u64).collect::<Vec<_>>());
    }

    #[test]
    fn executors_agree_bitwise() {
        let mc = MonteCarlo::new(3, 5000);
        let f = |acc: &mut f64, _: u64, rng: &mut StreamRng| *acc += rng.random::<f64>().ln();
        let seq = mc.sequential().fold(|| 0.0, f, |a, b| *a += b);
        let par = mc.fold(|| 0.0, f, |a, b| *a += b);
        assert_eq!(seq.to_bits(), par.to_bits());
    }

    #[test]
    fn zero_replications() {
        let mc = MonteCarlo::new(3, 0);
        assert!(mc.map(|i, _| i).is_empty());
    }
}
