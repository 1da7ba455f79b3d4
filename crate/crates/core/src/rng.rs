//! Per-path random streams.
//!
//! Each path owns a ChaCha8 generator keyed by the master seed, with the
//! path index selecting one of its 2^64 independent streams. Normal variates
//! come from the ziggurat sampler in `rand_distr`, so a stream's output is a
//! pure function of `(master_seed, path_index, draws)`.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    path_index: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(path_index);
        RngStream {
            master_seed,
            path_index,
            draws: 0,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Number of normal variates drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.draws += 1;
        StandardNormal.sample(&mut self.rng)
    }
}

/// Draws one standard normal variate from `stream`.
#[inline]
pub fn standard_normal(stream: &mut RngStream) -> f64 {
    stream.standard_normal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_identical() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 0);
        for _ in 0..1000 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        assert_eq!(a.draws(), 1000);
    }

    #[test]
    fn streams_differ_by_path_and_seed() {
        let first = |seed, path| RngStream::new(seed, path).standard_normal();
        assert_ne!(first(42, 0), first(42, 1));
        assert_ne!(first(42, 0), first(43, 0));
    }

    #[test]
    fn moments_of_a_million_draws() {
        let n = 1_000_000;
        let mut s = RngStream::new(1, 0);
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.standard_normal();
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        // five standard errors: 5/sqrt(n) and 5*sqrt(2/n)
        assert!(mean.abs() < 5e-3, "mean {mean}");
        assert!((var - 1.0).abs() < 7e-3, "var {var}");
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let n = 200_000;
        let mut a = RngStream::new(9, 0);
        let mut b = RngStream::new(9, 1);
        let mut cross = 0.0;
        for _ in 0..n {
            cross += a.standard_normal() * b.standard_normal();
        }
        // correlation estimate has standard error 1/sqrt(n)
        assert!((cross / n as f64).abs() < 5.0 / (n as f64).sqrt());
    }
}
