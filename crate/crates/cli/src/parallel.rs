//! Multi-threaded drivers over the core ensemble chunks.
//!
//! Chunks are evaluated in parallel and merged in path order, so results
//! are bitwise identical to the sequential core drivers for any thread
//! count.

use callmoney_core::ensemble::{chunk_ranges, hit_tally_chunk, run_chunk};
use callmoney_core::stats::merge_tree;
use callmoney_core::{EnsembleSpec, EnsembleStats, HitTally, ModelError, ModelParams, SimConfig};
use rayon::prelude::*;

pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats, ModelError> {
    spec.validate()?;
    let parts = chunk_ranges(spec.n_paths)
        .into_par_iter()
        .map(|range| run_chunk(spec, range))
        .collect::<Result<Vec<_>, _>>()?;
    merge_tree(parts)
}

pub fn run_hit_tally(
    params: &ModelParams,
    config: &SimConfig,
    n_paths: u64,
    master_seed: u64,
) -> Result<HitTally, ModelError> {
    chunk_ranges(n_paths)
        .into_par_iter()
        .map(|range| hit_tally_chunk(params, config, master_seed, range))
        .try_reduce(HitTally::default, |mut a, b| {
            a.merge(&b);
            Ok(a)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use callmoney_core::{derive_params, Observable};

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let p = derive_params(1.0, 1.0, 1.0, 0.09, 0.15, true).unwrap();
        let c = SimConfig::new(5.0, 500, 25).unwrap();
        let spec = EnsembleSpec::new(p, c, 2500, 3, &Observable::ALL).unwrap();
        let seq = callmoney_core::run_ensemble(&spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let par = pool.install(|| run_ensemble(&spec)).unwrap();
        assert_eq!(seq, par);
        let tally = pool.install(|| run_hit_tally(&p, &c, 2500, 3)).unwrap();
        assert_eq!(tally, seq.hits);
    }
}
