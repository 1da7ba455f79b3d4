//! Monte Carlo ensembles over independent paths.
//!
//! Paths are split into fixed-size chunks by path index. Each chunk is
//! accumulated sequentially and the chunk results are combined with
//! [`merge_tree`], so any executor that evaluates [`run_chunk`] over
//! [`chunk_ranges`] and merges in order reproduces [`run_ensemble`] bit for
//! bit.

use alloc::{boxed::Box, vec::Vec};
use core::ops::Range;

use crate::error::ModelError;
use crate::params::ModelParams;
use crate::path::{drive, hits_zero, ShockCoupling, SimConfig, StreamShocks};
use crate::rng::RngStream;
use crate::stats::{merge_tree, EnsembleStats, HitTally, Observable, ObservableContext};

/// Paths per accumulation chunk.
pub const CHUNK_PATHS: u64 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub params: ModelParams,
    pub config: SimConfig,
    pub n_paths: u64,
    pub master_seed: u64,
    pub observables: Vec<Observable>,
    pub coupling: ShockCoupling,
}

impl EnsembleSpec {
    pub fn new(
        params: ModelParams,
        config: SimConfig,
        n_paths: u64,
        master_seed: u64,
        observables: &[Observable],
    ) -> Result<Self, ModelError> {
        let spec = EnsembleSpec {
            params,
            config,
            n_paths,
            master_seed,
            observables: observables.to_vec(),
            coupling: ShockCoupling::Common,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_paths == 0 {
            return Err(ModelError::Parameter {
                name: "paths",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if self.observables.is_empty() {
            return Err(ModelError::Usage("no observables requested".into()));
        }
        Ok(())
    }

    pub fn with_coupling(mut self, coupling: ShockCoupling) -> Self {
        self.coupling = coupling;
        self
    }

    fn shocks(&self, path_index: u64) -> StreamShocks {
        StreamShocks {
            stream: RngStream::new(self.master_seed, path_index),
            coupling: self.coupling,
        }
    }
}

/// Consecutive path-index ranges of at most [`CHUNK_PATHS`] paths.
pub fn chunk_ranges(n_paths: u64) -> Vec<Range<u64>> {
    (0..n_paths.div_ceil(CHUNK_PATHS))
        .map(|c| c * CHUNK_PATHS..((c + 1) * CHUNK_PATHS).min(n_paths))
        .collect()
}

/// Accumulates the paths in `range` in index order.
pub fn run_chunk(spec: &EnsembleSpec, range: Range<u64>) -> Result<EnsembleStats, ModelError> {
    let ctx = ObservableContext::new(&spec.params);
    let mut stats = EnsembleStats::new(&spec.observables, spec.config.record_times());
    let observables = spec.observables.clone();
    for path_index in range {
        let mut shocks = spec.shocks(path_index);
        let mut time_index = 0;
        let terminal = drive(&spec.params, &spec.config, &mut shocks, |s| {
            for (slot, &obs) in observables.iter().enumerate() {
                stats.push(slot, time_index, ctx.evaluate(obs, s));
            }
            time_index += 1;
        })
        .map_err(|e| ModelError::Path {
            path_index,
            source: Box::new(e),
        })?;
        for (slot, &obs) in observables.iter().enumerate() {
            stats.push_terminal(slot, ctx.evaluate(obs, &terminal));
        }
        stats.hits.merge(&HitTally {
            hits: u64::from(terminal.hit_zero),
            n_paths: 1,
        });
    }
    Ok(stats)
}

/// Runs the whole ensemble on the calling thread.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats, ModelError> {
    spec.validate()?;
    let parts = chunk_ranges(spec.n_paths)
        .into_iter()
        .map(|r| run_chunk(spec, r))
        .collect::<Result<Vec<_>, _>>()?;
    merge_tree(parts)
}

/// Counts zero-rate hits on the paths in `range`, abandoning each path at
/// its first hit.
pub fn hit_tally_chunk(
    params: &ModelParams,
    config: &SimConfig,
    master_seed: u64,
    range: Range<u64>,
) -> Result<HitTally, ModelError> {
    let mut tally = HitTally::default();
    for path_index in range {
        let mut shocks = StreamShocks {
            stream: RngStream::new(master_seed, path_index),
            coupling: ShockCoupling::Common,
        };
        let hit = hits_zero(params, config, &mut shocks).map_err(|e| ModelError::Path {
            path_index,
            source: Box::new(e),
        })?;
        tally.hits += u64::from(hit);
        tally.n_paths += 1;
    }
    Ok(tally)
}

/// Hitting-only ensemble: identical hit flags to [`run_ensemble`] with the
/// same seed, at a fraction of the cost.
pub fn run_hit_tally(
    params: &ModelParams,
    config: &SimConfig,
    n_paths: u64,
    master_seed: u64,
) -> Result<HitTally, ModelError> {
    hit_tally_chunk(params, config, master_seed, 0..n_paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use crate::path::simulate_path;
    use crate::stats::Observable as O;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn sp() -> ModelParams {
        derive_params(1.0, 1.0, 1.0, 0.09, 0.15, true).unwrap()
    }

    #[test]
    fn chunking_covers_all_paths() {
        assert_eq!(chunk_ranges(1), vec![0..1]);
        let r = chunk_ranges(2 * CHUNK_PATHS + 5);
        assert_eq!(r.len(), 3);
        assert_eq!(r[2], 2 * CHUNK_PATHS..2 * CHUNK_PATHS + 5);
    }

    #[test]
    fn single_path_ensemble_reproduces_the_path() {
        let p = sp();
        let c = SimConfig::new(5.0, 500, 50).unwrap();
        let spec = EnsembleSpec::new(p, c, 1, 77, &[O::Rate, O::Leverage]).unwrap();
        let stats = run_ensemble(&spec).unwrap();
        let path = simulate_path(&p, &c, RngStream::new(77, 0)).unwrap();
        let series = stats.moment_series(O::Rate).unwrap();
        assert_eq!(series.len(), path.grid.len());
        for ((t, mean, std), pt) in series.iter().zip(&path.grid) {
            assert_eq!(*t, pt.t);
            assert_eq!(*mean, pt.r_l);
            assert_eq!(*std, 0.0);
        }
        assert_eq!(
            stats.terminal_samples(O::Leverage).unwrap(),
            &[path.terminal.b]
        );
    }

    #[test]
    fn counts_and_initial_moments() {
        let p = sp();
        let c = SimConfig::new(2.0, 200, 20).unwrap();
        let spec = EnsembleSpec::new(p, c, 300, 1, &O::ALL).unwrap();
        let stats = run_ensemble(&spec).unwrap();
        for o in O::ALL {
            let m = stats.moments(o).unwrap();
            assert!(m.iter().all(|m| m.count == 300));
            assert_eq!(m[0].std(), 0.0);
            assert_eq!(stats.terminal_samples(o).unwrap().len(), 300);
        }
        assert_relative_eq!(stats.moments(O::Ratio).unwrap()[0].mean, 1.0);
    }

    #[test]
    fn chunked_merge_matches_direct_accumulation() {
        let p = sp();
        let c = SimConfig::new(3.0, 300, 30).unwrap();
        let n = CHUNK_PATHS * 3 + 17;
        let spec = EnsembleSpec::new(p, c, n, 5, &[O::Ratio]).unwrap();
        let merged = run_ensemble(&spec).unwrap();
        let direct = run_chunk(&spec, 0..n).unwrap();
        let a = merged.moments(O::Ratio).unwrap();
        let b = direct.moments(O::Ratio).unwrap();
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.count, y.count);
            assert_relative_eq!(x.mean, y.mean, max_relative = 1e-12);
            assert_relative_eq!(x.m2, y.m2, max_relative = 1e-9);
        }
        assert_eq!(
            merged.terminal_samples(O::Ratio).unwrap(),
            direct.terminal_samples(O::Ratio).unwrap()
        );
    }

    #[test]
    fn hit_tally_matches_full_ensemble() {
        let p = derive_params(1.0, 1.0, 1.0, 0.08, 0.2, true).unwrap();
        let c = SimConfig::new(30.0, 3000, 3000).unwrap();
        let spec = EnsembleSpec::new(p, c, 500, 9, &[O::Rate]).unwrap();
        let full = run_ensemble(&spec).unwrap();
        let fast = run_hit_tally(&p, &c, 500, 9).unwrap();
        assert_eq!(full.hits, fast);
        assert!(fast.hits > 0 && fast.hits < 500);
    }

    #[test]
    fn zero_initial_rate_always_hits() {
        let p = derive_params(1.0, 1.0, 1.0, 0.06, 0.2, true).unwrap();
        assert!((p.r_inf - 0.04).abs() < 1e-15);
        let c = SimConfig::new(1.0, 10, 10).unwrap();
        let t = run_hit_tally(&p, &c, 50, 0).unwrap();
        assert_eq!(t.hitting_probability(), (1.0, 0.0));
    }

    #[test]
    fn rejects_empty_specs() {
        let c = SimConfig::new(1.0, 10, 1).unwrap();
        assert!(EnsembleSpec::new(sp(), c, 0, 0, &[O::Rate]).is_err());
        assert!(EnsembleSpec::new(sp(), c, 10, 0, &[]).is_err());
    }
}
