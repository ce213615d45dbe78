//! Reproducible Monte Carlo plumbing.
//!
//! Every sampled quantity in the toolkit runs on counter-based ChaCha
//! substreams: run `i` of a job with master seed `s` always draws from
//! stream `i` of a ChaCha8 generator seeded with `s`, so results are
//! bit-identical regardless of how runs are partitioned across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const RNG_ALGORITHM: &str = "chacha8";

/// Generator for one run of a sampled job.
pub fn substream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Estimate with its uncertainty and enough metadata to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub estimate: f64,
    pub std_error: f64,
    pub runs: u64,
    pub seed: u64,
    pub rng_algorithm: String,
}

impl MonteCarloResult {
    /// Result for a Bernoulli fraction `successes / runs` with the binomial
    /// standard error.
    pub fn from_counts(successes: u64, runs: u64, seed: u64) -> Self {
        let p = successes as f64 / runs as f64;
        MonteCarloResult {
            estimate: p,
            std_error: (p * (1.0 - p) / runs as f64).sqrt(),
            runs,
            seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
        }
    }

    /// Whether `other_value` lies within `n_sigma` combined standard errors,
    /// treating `other_std_error` as the uncertainty of the reference.
    pub fn within_sigma(&self, other_value: f64, other_std_error: f64, n_sigma: f64) -> bool {
        let sigma = (self.std_error.powi(2) + other_std_error.powi(2)).sqrt();
        (self.estimate - other_value).abs() <= n_sigma * sigma
    }
}

/// Kahan compensated accumulator for long probability sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_independent_of_partitioning() {
        let direct: Vec<u64> = (0..8).map(|i| substream(42, i).random()).collect();
        let mut chunked = Vec::new();
        for chunk in [(0..3), (3..8)] {
            for i in chunk {
                chunked.push(substream(42, i).random::<u64>());
            }
        }
        assert_eq!(direct, chunked);
        assert_ne!(direct[0], direct[1]);
    }

    #[test]
    fn kahan_handles_small_terms() {
        let mut s = KahanSum::default();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-10)).abs() < 1e-13);
    }

    #[test]
    fn counts_to_result() {
        let r = MonteCarloResult::from_counts(250, 1000, 7);
        assert_eq!(r.estimate, 0.25);
        assert!((r.std_error - (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-15);
        assert!(r.within_sigma(0.25, 0.0, 1.0));
        assert!(!r.within_sigma(0.40, 0.0, 3.0));
    }
}
