//! Sample paths of the coupled system `(S_t, V_t, q_t)`.
//!
//! The scheme works in log space with the leverage and margin rate frozen at
//! the start of each step:
//!
//! ```text
//! log S += nu dt + sigma sqrt(dt) z
//! log V += (b mu + (1 - b) r - sigma^2 b^2 / 2) dt + b sigma sqrt(dt) z
//! log q += r dt
//! I     += b sqrt(dt) z
//! ```
//!
//! A single Brownian shock `z` drives both the index and the gambler, and
//! the margin rate is re-cleared from the new `q / V` after every step. With
//! frozen coefficients the one-step conditional mean of `q / V` is exactly
//! its current value, so the discrete ratio keeps the martingale property.

use alloc::vec::Vec;

use crate::error::ModelError;
use crate::math::{exp, ln, sqrt};
use crate::model::{growth_at, leverage_at, rate_at};
use crate::params::ModelParams;
use crate::rng::RngStream;

/// One instant of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub t: f64,
    pub log_s: f64,
    pub log_v: f64,
    /// `-inf` encodes an empty money market.
    pub log_q: f64,
    /// Margin rate cleared from the current `q / V`.
    pub r_l: f64,
    /// Kelly leverage at the current `q / V`.
    pub b: f64,
    /// Running stochastic integral of leverage against the Brownian motion.
    pub integral: f64,
    /// Set once the margin rate has been observed at zero.
    pub hit_zero: bool,
}

impl MarketState {
    pub fn initial(p: &ModelParams) -> MarketState {
        MarketState::from_logs(0.0, ln(p.s0), ln(p.v0), ln(p.q0), 0.0, false, p)
    }

    /// Builds a state and clears the market at the given log levels.
    pub fn from_logs(
        t: f64,
        log_s: f64,
        log_v: f64,
        log_q: f64,
        integral: f64,
        hit_zero: bool,
        p: &ModelParams,
    ) -> MarketState {
        let ratio = exp(log_q - log_v);
        let r_l = rate_at(ratio, p);
        MarketState {
            t,
            log_s,
            log_v,
            log_q,
            r_l,
            b: leverage_at(ratio, p),
            integral,
            hit_zero: hit_zero || r_l == 0.0,
        }
    }

    /// Relative market size `q / V`.
    pub fn ratio(&self) -> f64 {
        exp(self.log_q - self.log_v)
    }

    /// Instantaneous Kelly growth rate at the cleared rate.
    pub fn growth(&self, p: &ModelParams) -> f64 {
        growth_at(self.b, self.r_l, p)
    }

    fn is_sane(&self) -> bool {
        !(self.t.is_nan()
            || self.integral.is_nan()
            || !self.log_s.is_finite()
            || !self.log_v.is_finite()
            || self.log_q.is_nan()
            || self.log_q == f64::INFINITY)
    }
}

/// Advances `state` by `dt` years under one standard normal shock `z`.
pub fn step(
    state: &MarketState,
    dt: f64,
    z: f64,
    p: &ModelParams,
) -> Result<MarketState, ModelError> {
    step_split(state, dt, z, z, p)
}

/// Same as [`step`], with separate shocks for the gambler and the index.
/// Only the negative-control experiments pass differing values.
pub fn step_split(
    state: &MarketState,
    dt: f64,
    z_gambler: f64,
    z_index: f64,
    p: &ModelParams,
) -> Result<MarketState, ModelError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::domain("step", alloc::format!("dt = {dt}")));
    }
    if !state.is_sane() || !z_gambler.is_finite() || !z_index.is_finite() {
        return Err(ModelError::Numeric { t: state.t });
    }
    let next = advance(state, dt, sqrt(dt), z_gambler, z_index, p);
    if next.is_sane() {
        Ok(next)
    } else {
        Err(ModelError::Numeric { t: next.t })
    }
}

#[inline(always)]
fn advance(
    s: &MarketState,
    dt: f64,
    sqrt_dt: f64,
    z_gambler: f64,
    z_index: f64,
    p: &ModelParams,
) -> MarketState {
    let (b, r) = (s.b, s.r_l);
    let dw = sqrt_dt * z_gambler;
    let log_s = s.log_s + p.nu * dt + p.sigma * sqrt_dt * z_index;
    let log_v =
        s.log_v + (b * p.mu + (1.0 - b) * r - 0.5 * p.variance() * b * b) * dt + b * p.sigma * dw;
    let log_q = s.log_q + r * dt;
    MarketState::from_logs(
        s.t + dt,
        log_s,
        log_v,
        log_q,
        s.integral + b * dw,
        s.hit_zero,
        p,
    )
}

/// Time grid of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon_years: f64,
    pub n_steps: u64,
    /// Record every this many steps; the final step is always recorded.
    pub record_every: u64,
}

impl SimConfig {
    pub fn new(horizon_years: f64, n_steps: u64, record_every: u64) -> Result<Self, ModelError> {
        if !(horizon_years > 0.0 && horizon_years.is_finite()) {
            return Err(ModelError::Parameter {
                name: "horizon",
                value: horizon_years,
                reason: "must be finite and > 0",
            });
        }
        if n_steps == 0 {
            return Err(ModelError::Parameter {
                name: "steps",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if record_every == 0 {
            return Err(ModelError::Parameter {
                name: "record_every",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(SimConfig {
            horizon_years,
            n_steps,
            record_every,
        })
    }

    /// Config that records roughly `records` evenly spaced points.
    pub fn with_records(
        horizon_years: f64,
        n_steps: u64,
        records: u64,
    ) -> Result<Self, ModelError> {
        let stride = (n_steps / records.max(1)).max(1);
        SimConfig::new(horizon_years, n_steps, stride)
    }

    pub fn dt(&self) -> f64 {
        self.horizon_years / self.n_steps as f64
    }

    fn is_record_step(&self, k: u64) -> bool {
        k.is_multiple_of(self.record_every) || k == self.n_steps
    }

    /// Number of recorded points, including `t = 0` and the final step.
    pub fn record_count(&self) -> usize {
        let regular = self.n_steps / self.record_every + 1;
        let extra = u64::from(!self.n_steps.is_multiple_of(self.record_every));
        (regular + extra) as usize
    }

    /// Recorded times in order.
    pub fn record_times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps)
            .filter(|&k| self.is_record_step(k))
            .map(|k| k as f64 * dt)
            .collect()
    }
}

/// Standard normal shocks for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shocks {
    /// Drives the gambler's equity (and the leverage integral).
    pub gambler: f64,
    /// Drives the index.
    pub index: f64,
}

pub trait ShockSource {
    fn next_shocks(&mut self) -> Shocks;
}

/// How a random stream is turned into per-step shocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShockCoupling {
    /// One Brownian motion drives the whole economy.
    #[default]
    Common,
    /// Index and gambler get independent draws (negative control only).
    Decoupled,
}

/// Shocks drawn from a seeded stream.
#[derive(Debug, Clone)]
pub struct StreamShocks {
    pub stream: RngStream,
    pub coupling: ShockCoupling,
}

impl ShockSource for StreamShocks {
    #[inline]
    fn next_shocks(&mut self) -> Shocks {
        let gambler = self.stream.standard_normal();
        let index = match self.coupling {
            ShockCoupling::Common => gambler,
            ShockCoupling::Decoupled => self.stream.standard_normal(),
        };
        Shocks { gambler, index }
    }
}

/// All shocks zero: the deterministic skeleton of the dynamics.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroShocks;

impl ShockSource for ZeroShocks {
    fn next_shocks(&mut self) -> Shocks {
        Shocks {
            gambler: 0.0,
            index: 0.0,
        }
    }
}

/// Runs the full grid, calling `on_record` at every recorded point.
/// Returns the terminal state.
pub fn drive<S, F>(
    p: &ModelParams,
    c: &SimConfig,
    shocks: &mut S,
    mut on_record: F,
) -> Result<MarketState, ModelError>
where
    S: ShockSource + ?Sized,
    F: FnMut(&MarketState),
{
    let dt = c.dt();
    let sqrt_dt = sqrt(dt);
    let mut state = MarketState::initial(p);
    on_record(&state);
    for k in 1..=c.n_steps {
        let z = shocks.next_shocks();
        let mut next = advance(&state, dt, sqrt_dt, z.gambler, z.index, p);
        next.t = k as f64 * dt;
        if !next.is_sane() {
            return Err(ModelError::Numeric { t: next.t });
        }
        state = next;
        if c.is_record_step(k) {
            on_record(&state);
        }
    }
    Ok(state)
}

/// Whether the margin rate touches zero anywhere on the grid. Stops at the
/// first hit.
pub fn hits_zero<S>(p: &ModelParams, c: &SimConfig, shocks: &mut S) -> Result<bool, ModelError>
where
    S: ShockSource + ?Sized,
{
    let dt = c.dt();
    let sqrt_dt = sqrt(dt);
    let mut state = MarketState::initial(p);
    for k in 1..=c.n_steps {
        if state.hit_zero {
            return Ok(true);
        }
        let z = shocks.next_shocks();
        state = advance(&state, dt, sqrt_dt, z.gambler, z.index, p);
        if !state.is_sane() {
            return Err(ModelError::Numeric { t: k as f64 * dt });
        }
    }
    Ok(state.hit_zero)
}

/// A recorded observation of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordPoint {
    pub t: f64,
    pub log_s: f64,
    pub log_v: f64,
    pub log_q: f64,
    pub r_l: f64,
    pub b: f64,
    pub integral: f64,
}

impl From<&MarketState> for RecordPoint {
    fn from(s: &MarketState) -> Self {
        RecordPoint {
            t: s.t,
            log_s: s.log_s,
            log_v: s.log_v,
            log_q: s.log_q,
            r_l: s.r_l,
            b: s.b,
            integral: s.integral,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub params: ModelParams,
    pub config: SimConfig,
    pub grid: Vec<RecordPoint>,
    pub hit_zero: bool,
    pub terminal: MarketState,
}

/// Simulates one path from the stream `(master_seed, path_index)`.
pub fn simulate_path(
    p: &ModelParams,
    c: &SimConfig,
    stream: RngStream,
) -> Result<Path, ModelError> {
    let mut shocks = StreamShocks {
        stream,
        coupling: ShockCoupling::Common,
    };
    simulate_path_with(p, c, &mut shocks)
}

pub fn simulate_path_with<S>(
    p: &ModelParams,
    c: &SimConfig,
    shocks: &mut S,
) -> Result<Path, ModelError>
where
    S: ShockSource + ?Sized,
{
    let mut grid = Vec::with_capacity(c.record_count());
    let terminal = drive(p, c, shocks, |s| grid.push(RecordPoint::from(s)))?;
    Ok(Path {
        params: *p,
        config: *c,
        grid,
        hit_zero: terminal.hit_zero,
        terminal,
    })
}

/// Slack between the pathwise upper envelope
/// `(q0/V0) exp(-sigma^2 t / 2 - sigma I_t)` and the realized `q_t / V_t`,
/// at every recorded point. Non-negative up to discretization error.
pub fn pathwise_envelope_margin(path: &Path) -> Vec<(f64, f64)> {
    let p = &path.params;
    let (ln_q0, ln_v0) = (ln(p.q0), ln(p.v0));
    let r0 = p.initial_ratio();
    path.grid
        .iter()
        .map(|pt| {
            let envelope = exp(-0.5 * p.variance() * pt.t - p.sigma * pt.integral);
            let actual = exp((pt.log_q - ln_q0) - (pt.log_v - ln_v0));
            (pt.t, r0 * (envelope - actual))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use approx::assert_relative_eq;

    fn sp() -> ModelParams {
        derive_params(1.0, 1.0, 1.0, 0.09, 0.15, true).unwrap()
    }

    #[test]
    fn deterministic_step_at_unit_ratio() {
        let p = sp();
        let dt = 1.0 / 365.0;
        let s0 = MarketState::initial(&p);
        assert_relative_eq!(s0.b, 2.0);
        assert_relative_eq!(s0.r_l, 0.05625, epsilon = 1e-15);
        let s1 = step(&s0, dt, 0.0, &p).unwrap();
        assert_relative_eq!(s1.log_v - s0.log_v, 0.10125 * dt, epsilon = 1e-17);
        assert_relative_eq!(s1.log_s - s0.log_s, 0.09 * dt, epsilon = 1e-17);
        assert_relative_eq!(s1.log_q - s0.log_q, 0.05625 * dt, epsilon = 1e-17);
        assert_relative_eq!(exp(s1.log_q), (0.05625f64 / 365.0).exp(), epsilon = 1e-15);
        assert!((exp(s1.log_q) - 1.000_154_13).abs() < 1e-8);
        assert_relative_eq!(s1.t, dt);
    }

    #[test]
    fn unlevered_gambler_tracks_index() {
        let p = sp();
        let s0 = MarketState::from_logs(0.0, 0.0, 0.0, f64::NEG_INFINITY, 0.0, false, &p);
        assert_eq!(s0.b, 1.0);
        let dt = 0.01;
        let s1 = step(&s0, dt, 0.0, &p).unwrap();
        assert_relative_eq!(s1.log_v, p.nu * dt, epsilon = 1e-18);
        assert_relative_eq!(s1.log_s, p.nu * dt, epsilon = 1e-18);
        let s2 = step(&s1, dt, 1.3, &p).unwrap();
        assert_relative_eq!(s2.log_v, s2.log_s, epsilon = 1e-15);
    }

    #[test]
    fn step_rejects_bad_input() {
        let p = sp();
        let s = MarketState::initial(&p);
        assert!(step(&s, 0.0, 0.0, &p).is_err());
        assert!(matches!(
            step(&s, 0.1, f64::NAN, &p),
            Err(ModelError::Numeric { .. })
        ));
        let mut bad = s;
        bad.log_v = f64::INFINITY;
        assert!(matches!(
            step(&bad, 0.1, 0.0, &p),
            Err(ModelError::Numeric { .. })
        ));
    }

    #[test]
    fn hit_flag_is_sticky() {
        let p = sp();
        // ratio 3.5 sits exactly on the zero-rate barrier
        let s = MarketState::from_logs(0.0, 0.0, 0.0, ln(3.6), 0.0, false, &p);
        assert!(s.hit_zero);
        let mut cur = s;
        for _ in 0..50 {
            cur = step(&cur, 0.1, 1.0, &p).unwrap();
            assert!(cur.hit_zero);
        }
        assert!(cur.r_l > 0.0);
    }

    #[test]
    fn zero_shocks_give_deterministic_index() {
        let p = sp();
        let c = SimConfig::new(7.0, 700, 10).unwrap();
        let path = simulate_path_with(&p, &c, &mut ZeroShocks).unwrap();
        assert_relative_eq!(path.terminal.log_s, p.nu * 7.0, epsilon = 1e-13);
        assert_eq!(path.terminal.integral, 0.0);
    }

    #[test]
    fn record_grid_layout() {
        let c = SimConfig::new(1.0, 10, 3).unwrap();
        let times = c.record_times();
        assert_eq!(times.len(), c.record_count());
        assert_eq!(times.len(), 5); // 0, 3, 6, 9, 10
        assert_eq!(times[0], 0.0);
        assert_relative_eq!(*times.last().unwrap(), 1.0);

        let p = sp();
        let path = simulate_path(&p, &c, RngStream::new(3, 0)).unwrap();
        assert_eq!(path.grid.len(), 5);
        assert!(path.grid.windows(2).all(|w| w[1].t > w[0].t));
        let first = path.grid[0];
        assert_eq!(first.t, 0.0);
        assert_eq!(first.log_q, 0.0);
        assert_eq!(first.log_v, 0.0);
        assert_eq!(first.integral, 0.0);
    }

    #[test]
    fn replay_is_bitwise_identical() {
        let p = sp();
        let c = SimConfig::new(10.0, 5000, 50).unwrap();
        let a = simulate_path(&p, &c, RngStream::new(11, 4)).unwrap();
        let b = simulate_path(&p, &c, RngStream::new(11, 4)).unwrap();
        assert_eq!(a, b);
        let other = simulate_path(&p, &c, RngStream::new(11, 5)).unwrap();
        assert_ne!(a.terminal, other.terminal);
    }

    #[test]
    fn invariants_along_paths() {
        let p = sp();
        let c = SimConfig::new(50.0, 5000, 1).unwrap();
        for i in 0..20 {
            let path = simulate_path(&p, &c, RngStream::new(5, i)).unwrap();
            let mut seen_zero = false;
            for w in path.grid.windows(2) {
                assert!(w[1].log_q >= w[0].log_q);
            }
            for pt in &path.grid {
                assert!(pt.r_l >= 0.0 && pt.r_l <= p.r_inf);
                assert!(pt.b >= 1.0 && pt.b <= p.b_cap);
                seen_zero |= pt.r_l == 0.0;
            }
            assert_eq!(seen_zero, path.hit_zero);
        }
    }

    #[test]
    fn envelope_margin_is_tight_at_start_and_non_negative() {
        let p = sp();
        let c = SimConfig::new(20.0, 20_000, 20).unwrap();
        let path = simulate_path(&p, &c, RngStream::new(8, 0)).unwrap();
        let margins = pathwise_envelope_margin(&path);
        assert_eq!(margins[0], (0.0, 0.0));
        assert!(margins.iter().all(|&(_, m)| m >= -1e-12));
    }

    #[test]
    fn envelope_margin_degenerate_empty_market() {
        let p = derive_params(1e-300, 1.0, 1.0, 0.09, 0.15, true).unwrap();
        let c = SimConfig::new(5.0, 500, 5).unwrap();
        let path = simulate_path(&p, &c, RngStream::new(2, 0)).unwrap();
        for (_, m) in pathwise_envelope_margin(&path) {
            assert!(m.abs() < 1e-290);
        }
    }

    #[test]
    fn hits_zero_agrees_with_full_path() {
        let p = derive_params(1.0, 1.0, 1.0, 0.07, 0.2, true).unwrap();
        let c = SimConfig::new(50.0, 5000, 1).unwrap();
        for i in 0..40 {
            let full = simulate_path(&p, &c, RngStream::new(4, i)).unwrap();
            let mut shocks = StreamShocks {
                stream: RngStream::new(4, i),
                coupling: ShockCoupling::Common,
            };
            assert_eq!(hits_zero(&p, &c, &mut shocks).unwrap(), full.hit_zero);
        }
    }
}
