//! Streaming cross-path statistics.

use alloc::{format, vec, vec::Vec};
use core::fmt;

use crate::error::ModelError;
use crate::math::{exp, ln, sqrt};
use crate::params::ModelParams;
use crate::path::MarketState;

/// Running count, mean, sum of squared deviations, min and max (Welford),
/// mergeable with Chan's pairwise update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Moments {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    /// Unbiased variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        } else {
            0.0
        }
    }

    pub fn std(&self) -> f64 {
        sqrt(self.variance())
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.count > 0 {
            self.std() / sqrt(self.count as f64)
        } else {
            0.0
        }
    }

    /// Normal-approximation standard error of the sample standard deviation.
    pub fn std_sem(&self) -> f64 {
        if self.count > 1 {
            self.std() / sqrt(2.0 * (self.count - 1) as f64)
        } else {
            0.0
        }
    }
}

/// Quantities tracked across an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    /// Relative market size `q / V`.
    Ratio,
    /// Margin rate.
    Rate,
    /// Kelly leverage.
    Leverage,
    /// Instantaneous Kelly growth rate.
    Growth,
    /// Gambler equity in index shares, `V / S`.
    EquityInShares,
    /// Money market in index shares, `q / S`.
    MoneyInShares,
    /// Aggregate wealth in index shares, `(q + V) / S`.
    WealthInShares,
    /// Realized growth `log(q_t / q0) / t` (zero at `t = 0`).
    RealizedGrowthMoney,
    /// Realized growth `log(S_t / S0) / t` (zero at `t = 0`).
    RealizedGrowthIndex,
    /// Realized growth `log(V_t / V0) / t` (zero at `t = 0`).
    RealizedGrowthEquity,
    /// Relative growth factor `(V_t / V0) / (S_t / S0)`.
    RelativeGrowth,
}

impl Observable {
    pub const ALL: [Observable; 11] = [
        Observable::Ratio,
        Observable::Rate,
        Observable::Leverage,
        Observable::Growth,
        Observable::EquityInShares,
        Observable::MoneyInShares,
        Observable::WealthInShares,
        Observable::RealizedGrowthMoney,
        Observable::RealizedGrowthIndex,
        Observable::RealizedGrowthEquity,
        Observable::RelativeGrowth,
    ];

    /// Stable column name used in CSV output and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Observable::Ratio => "R",
            Observable::Rate => "r_L",
            Observable::Leverage => "b",
            Observable::Growth => "Gamma",
            Observable::EquityInShares => "V_over_S",
            Observable::MoneyInShares => "q_over_S",
            Observable::WealthInShares => "wealth_over_S",
            Observable::RealizedGrowthMoney => "g_q",
            Observable::RealizedGrowthIndex => "g_S",
            Observable::RealizedGrowthEquity => "g_V",
            Observable::RelativeGrowth => "relative_growth",
        }
    }

    pub fn from_name(name: &str) -> Option<Observable> {
        Observable::ALL.into_iter().find(|o| o.name() == name)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Precomputed initial log levels for evaluating observables.
#[derive(Debug, Clone, Copy)]
pub struct ObservableContext {
    params: ModelParams,
    ln_q0: f64,
    ln_v0: f64,
    ln_s0: f64,
}

impl ObservableContext {
    pub fn new(params: &ModelParams) -> Self {
        ObservableContext {
            params: *params,
            ln_q0: ln(params.q0),
            ln_v0: ln(params.v0),
            ln_s0: ln(params.s0),
        }
    }

    pub fn evaluate(&self, obs: Observable, s: &MarketState) -> f64 {
        let per_year = |log_growth: f64| {
            if s.t > 0.0 {
                log_growth / s.t
            } else {
                0.0
            }
        };
        match obs {
            Observable::Ratio => s.ratio(),
            Observable::Rate => s.r_l,
            Observable::Leverage => s.b,
            Observable::Growth => s.growth(&self.params),
            Observable::EquityInShares => exp(s.log_v - s.log_s),
            Observable::MoneyInShares => exp(s.log_q - s.log_s),
            Observable::WealthInShares => exp(s.log_q - s.log_s) + exp(s.log_v - s.log_s),
            Observable::RealizedGrowthMoney => per_year(s.log_q - self.ln_q0),
            Observable::RealizedGrowthIndex => per_year(s.log_s - self.ln_s0),
            Observable::RealizedGrowthEquity => per_year(s.log_v - self.ln_v0),
            Observable::RelativeGrowth => exp((s.log_v - self.ln_v0) - (s.log_s - self.ln_s0)),
        }
    }
}

/// Paths whose margin rate touched zero, out of all paths simulated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HitTally {
    pub hits: u64,
    pub n_paths: u64,
}

impl HitTally {
    pub fn merge(&mut self, other: &HitTally) {
        self.hits += other.hits;
        self.n_paths += other.n_paths;
    }

    /// Estimated hitting probability and its binomial standard error.
    pub fn hitting_probability(&self) -> (f64, f64) {
        if self.n_paths == 0 {
            return (0.0, 0.0);
        }
        let n = self.n_paths as f64;
        let p = self.hits as f64 / n;
        (p, sqrt((p * (1.0 - p) / n).max(0.0)))
    }
}

/// Cross-path moments at every recorded time, hit counts and terminal
/// samples for an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    observables: Vec<Observable>,
    times: Vec<f64>,
    /// Indexed `[observable][time]`, flattened.
    moments: Vec<Moments>,
    terminal: Vec<Vec<f64>>,
    pub hits: HitTally,
}

impl EnsembleStats {
    pub fn new(observables: &[Observable], times: Vec<f64>) -> Self {
        EnsembleStats {
            observables: observables.to_vec(),
            moments: vec![Moments::default(); observables.len() * times.len()],
            terminal: vec![Vec::new(); observables.len()],
            times,
            hits: HitTally::default(),
        }
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_paths(&self) -> u64 {
        self.hits.n_paths
    }

    pub fn tracks(&self, obs: Observable) -> bool {
        self.observables.contains(&obs)
    }

    fn slot(&self, obs: Observable) -> Result<usize, ModelError> {
        self.observables
            .iter()
            .position(|&o| o == obs)
            .ok_or_else(|| ModelError::Usage(format!("observable `{obs}` was not tracked")))
    }

    /// Adds one observation at recording index `time_index`.
    #[inline]
    pub(crate) fn push(&mut self, slot: usize, time_index: usize, x: f64) {
        let n = self.times.len();
        self.moments[slot * n + time_index].push(x);
    }

    pub(crate) fn push_terminal(&mut self, slot: usize, x: f64) {
        self.terminal[slot].push(x);
    }

    /// Moments of `obs` at every recorded time.
    pub fn moments(&self, obs: Observable) -> Result<&[Moments], ModelError> {
        let slot = self.slot(obs)?;
        let n = self.times.len();
        Ok(&self.moments[slot * n..(slot + 1) * n])
    }

    /// Time-ordered `(t, mean, std)` with the unbiased standard deviation.
    pub fn moment_series(&self, obs: Observable) -> Result<Vec<(f64, f64, f64)>, ModelError> {
        Ok(self
            .times
            .iter()
            .zip(self.moments(obs)?)
            .map(|(&t, m)| (t, m.mean, m.std()))
            .collect())
    }

    /// Terminal values of `obs`, one per path in path-index order.
    pub fn terminal_samples(&self, obs: Observable) -> Result<&[f64], ModelError> {
        let slot = self.slot(obs)?;
        Ok(&self.terminal[slot])
    }

    pub fn hitting_probability(&self) -> (f64, f64) {
        self.hits.hitting_probability()
    }

    /// Index of the recorded time closest to `t`.
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Folds `later` (covering higher path indices) into `self`.
    pub fn merge(&mut self, later: &EnsembleStats) -> Result<(), ModelError> {
        if self.observables != later.observables || self.times != later.times {
            return Err(ModelError::Usage(
                "cannot merge ensembles with different layouts".into(),
            ));
        }
        for (a, b) in self.moments.iter_mut().zip(&later.moments) {
            a.merge(b);
        }
        for (a, b) in self.terminal.iter_mut().zip(&later.terminal) {
            a.extend_from_slice(b);
        }
        self.hits.merge(&later.hits);
        Ok(())
    }
}

/// Balanced pairwise merge of per-chunk statistics listed in path order.
/// The tree shape depends only on the number of parts.
pub fn merge_tree(mut parts: Vec<EnsembleStats>) -> Result<EnsembleStats, ModelError> {
    if parts.is_empty() {
        return Err(ModelError::Usage("no ensemble parts to merge".into()));
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut left) = it.next() {
            if let Some(right) = it.next() {
                left.merge(&right)?;
            }
            next.push(left);
        }
        parts = next;
    }
    Ok(parts.pop().expect("non-empty"))
}
