//! Theoretical bounds, path diagnostics, kernel density estimation and the
//! theorem report suite that turns an ensemble into pass/fail verdicts.

use alloc::{format, string::String, vec, vec::Vec};

use crate::error::ModelError;
use crate::math::{exp_m1, ln, sqrt};
use crate::model::rate_at;
use crate::params::ModelParams;
use crate::path::Path;
use crate::stats::{EnsembleStats, Moments, Observable};

/// Doob majorant `1 - r_L(0) / r_inf` on the probability that the margin
/// rate ever touches zero, clipped to `[0, 1]`.
pub fn doob_majorant(p: &ModelParams) -> Result<f64, ModelError> {
    if !(p.r_inf > 0.0) {
        return Err(ModelError::domain(
            "doob_majorant",
            format!("choke price {} is not positive", p.r_inf),
        ));
    }
    let r0 = rate_at(p.initial_ratio(), p);
    Ok((1.0 - r0 / p.r_inf).clamp(0.0, 1.0))
}

/// Lower and upper bounds on `Std(q_t / V_t)`.
pub fn relative_std_bounds(p: &ModelParams, t: f64) -> (f64, f64) {
    let r0 = p.initial_ratio();
    let sharpe = p.mu / p.sigma;
    (
        r0 * sqrt(exp_m1(p.variance() * t)),
        r0 * sqrt(exp_m1(sharpe * sharpe * t)),
    )
}

/// Realized continuously-compounded growth rates over a whole path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedGrowth {
    pub money: f64,
    pub index: f64,
    pub equity: f64,
}

pub fn realized_growth(path: &Path) -> Result<RealizedGrowth, ModelError> {
    let horizon = path.terminal.t;
    if !(horizon > 0.0) {
        return Err(ModelError::domain(
            "realized_growth",
            "path has zero length",
        ));
    }
    let p = &path.params;
    let end = &path.terminal;
    Ok(RealizedGrowth {
        money: (end.log_q - ln(p.q0)) / horizon,
        index: (end.log_s - ln(p.s0)) / horizon,
        equity: (end.log_v - ln(p.v0)) / horizon,
    })
}

/// Terminal `(V_T / V0) / (S_T / S0)`.
pub fn relative_growth_factor(path: &Path) -> f64 {
    let p = &path.params;
    let end = &path.terminal;
    crate::math::exp((end.log_v - ln(p.v0)) - (end.log_s - ln(p.s0)))
}

/// Kernel density estimate on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

#[inline]
fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Epanechnikov kernel density of `samples` evaluated at `grid`.
pub fn epanechnikov_kde(
    samples: &[f64],
    bandwidth: f64,
    grid: &[f64],
) -> Result<DensityEstimate, ModelError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(ModelError::Usage(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    if samples.is_empty() {
        return Err(ModelError::Usage("no samples for density estimate".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm = 1.0 / (sorted.len() as f64 * bandwidth);
    let density = grid
        .iter()
        .map(|&x| {
            // only samples within one bandwidth contribute
            let lo = sorted.partition_point(|&s| s < x - bandwidth);
            let hi = sorted.partition_point(|&s| s <= x + bandwidth);
            norm * sorted[lo..hi]
                .iter()
                .map(|&s| epanechnikov((x - s) / bandwidth))
                .sum::<f64>()
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        density,
        bandwidth,
    })
}

/// `points` evenly spaced abscissae over `[min - 3h, max + 3h]`.
pub fn kde_grid(samples: &[f64], bandwidth: f64, points: usize) -> Vec<f64> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * bandwidth;
    if points < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Grid size used for density estimates.
pub const KDE_POINTS: usize = 512;

/// Verdict for one theoretical claim checked against an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub id: &'static str,
    pub claim: &'static str,
    pub passed: bool,
    pub measured: Vec<(String, f64)>,
    pub tolerances: Vec<(String, f64)>,
    pub detail: String,
}

/// Tolerances for [`theorem_suite_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Standard errors of slack on every Monte Carlo comparison.
    pub sigmas: f64,
    /// Allowed gap between the terminal mean growth rate and `nu`.
    pub growth_tolerance: f64,
    /// Standard-deviation envelope is checked on `(0, envelope_horizon]`.
    pub envelope_horizon: f64,
    /// Times (years) at which the mean of `q/V` is compared with `q0/V0`;
    /// times beyond the horizon are replaced by the horizon. The sample mean
    /// of this heavy-tailed martingale is only informative over the first
    /// decade or so.
    pub martingale_times: Vec<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            sigmas: 3.0,
            growth_tolerance: 0.005,
            envelope_horizon: 2.0,
            martingale_times: vec![1.0, 5.0, 10.0],
        }
    }
}

const REQUIRED: [Observable; 8] = [
    Observable::Ratio,
    Observable::Rate,
    Observable::Leverage,
    Observable::Growth,
    Observable::EquityInShares,
    Observable::MoneyInShares,
    Observable::WealthInShares,
    Observable::RelativeGrowth,
];

pub fn theorem_suite(
    stats: &EnsembleStats,
    p: &ModelParams,
) -> Result<Vec<TheoremReport>, ModelError> {
    theorem_suite_with(stats, p, &SuiteOptions::default())
}

pub fn theorem_suite_with(
    stats: &EnsembleStats,
    p: &ModelParams,
    opts: &SuiteOptions,
) -> Result<Vec<TheoremReport>, ModelError> {
    for obs in REQUIRED {
        if !stats.tracks(obs) {
            return Err(ModelError::Usage(format!(
                "theorem suite needs observable `{obs}`"
            )));
        }
    }
    let majorant = doob_majorant(p)?;
    let k = opts.sigmas;
    let times = stats.times();
    let mut reports = vec![martingale_report(stats, p, opts)?];
    reports.push(monotone_report(
        "rate_submartingale",
        "E[r_L(t)] is non-decreasing",
        stats.moments(Observable::Rate)?,
        times,
        Trend::Up,
        k,
    ));
    reports.push(monotone_report(
        "leverage_supermartingale",
        "E[b_t] is non-increasing",
        stats.moments(Observable::Leverage)?,
        times,
        Trend::Down,
        k,
    ));
    reports.push(growth_report(stats, p, opts)?);
    reports.push(doob_report(stats, majorant, k));
    reports.push(envelope_report(stats, p, opts)?);
    reports.push(monotone_report(
        "equity_in_shares_submartingale",
        "E[V_t/S_t] is non-decreasing",
        stats.moments(Observable::EquityInShares)?,
        times,
        Trend::Up,
        k,
    ));
    reports.push(monotone_report(
        "money_in_shares_supermartingale",
        "E[q_t/S_t] is non-increasing",
        stats.moments(Observable::MoneyInShares)?,
        times,
        Trend::Down,
        k,
    ));
    reports.push(monotone_report(
        "wealth_in_shares_supermartingale",
        "E[(q_t+V_t)/S_t] is non-increasing",
        stats.moments(Observable::WealthInShares)?,
        times,
        Trend::Down,
        k,
    ));
    reports.push(relative_growth_report(stats, p, k)?);
    Ok(reports)
}

fn martingale_report(
    stats: &EnsembleStats,
    p: &ModelParams,
    opts: &SuiteOptions,
) -> Result<TheoremReport, ModelError> {
    let moments = stats.moments(Observable::Ratio)?;
    let times = stats.times();
    let horizon = times.last().copied().unwrap_or(0.0);
    let target = p.initial_ratio();
    let mut worst = (0.0f64, 0.0f64);
    let mut measured = Vec::new();
    let mut passed = true;
    for &t in &opts.martingale_times {
        let i = stats.nearest_time_index(t.min(horizon));
        let m = &moments[i];
        let dev = (m.mean - target).abs();
        let z = zscore(dev, m.sem());
        passed &= dev <= opts.sigmas * m.sem();
        measured.push((format!("E[q/V] at t={}", times[i]), m.mean));
        if z > worst.0 {
            worst = (z, times[i]);
        }
    }
    measured.push(("max |z|".into(), worst.0));
    Ok(TheoremReport {
        id: "ratio_martingale",
        claim: "E[q_t/V_t] stays at q0/V0",
        passed,
        measured,
        tolerances: vec![("sigmas".into(), opts.sigmas)],
        detail: format!("largest deviation {:.3} SE at t = {:.3}", worst.0, worst.1),
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Trend {
    Up,
    Down,
}

fn monotone_report(
    id: &'static str,
    claim: &'static str,
    moments: &[Moments],
    times: &[f64],
    trend: Trend,
    k: f64,
) -> TheoremReport {
    let (z, at) = worst_reversal(moments, times, trend);
    TheoremReport {
        id,
        claim,
        passed: z <= k,
        measured: vec![
            ("worst reversal (SE)".into(), z),
            ("initial mean".into(), moments[0].mean),
            ("final mean".into(), moments[moments.len() - 1].mean),
        ],
        tolerances: vec![("sigmas".into(), k)],
        detail: format!("worst reversal {z:.3} SE between recordings ending at t = {at:.3}"),
    }
}

/// Largest move against `trend` between consecutive recordings, in units
/// of the combined standard error of the two means.
fn worst_reversal(moments: &[Moments], times: &[f64], trend: Trend) -> (f64, f64) {
    let mut worst = (0.0f64, times.first().copied().unwrap_or(0.0));
    for (i, w) in moments.windows(2).enumerate() {
        let change = w[1].mean - w[0].mean;
        let against = match trend {
            Trend::Up => -change,
            Trend::Down => change,
        };
        if against <= 0.0 {
            continue;
        }
        let se = sqrt(w[0].sem() * w[0].sem() + w[1].sem() * w[1].sem());
        let z = zscore(against, se);
        if z > worst.0 {
            worst = (z, times[i + 1]);
        }
    }
    worst
}

fn zscore(dev: f64, se: f64) -> f64 {
    if se > 0.0 {
        dev / se
    } else if dev > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn growth_report(
    stats: &EnsembleStats,
    p: &ModelParams,
    opts: &SuiteOptions,
) -> Result<TheoremReport, ModelError> {
    let moments = stats.moments(Observable::Growth)?;
    let times = stats.times();
    let horizon = times.last().copied().unwrap_or(0.0);
    let last = &moments[moments.len() - 1];
    let gap = (last.mean - p.nu).abs();
    let mean_ok = gap <= opts.growth_tolerance + opts.sigmas * last.sem();
    // the spread builds up from zero first; check it falls over the later half
    let mid = &moments[stats.nearest_time_index(0.5 * horizon)];
    let std_ok =
        last.std() <= mid.std() + opts.sigmas * sqrt(sq(last.std_sem()) + sq(mid.std_sem()));
    Ok(TheoremReport {
        id: "growth_convergence",
        claim: "E[Gamma_t] -> nu and Std(Gamma_t) -> 0",
        passed: mean_ok && std_ok,
        measured: vec![
            ("E[Gamma_T]".into(), last.mean),
            ("Std(Gamma_T/2)".into(), mid.std()),
            ("Std(Gamma_T)".into(), last.std()),
        ],
        tolerances: vec![
            ("|E[Gamma_T]-nu|".into(), opts.growth_tolerance),
            ("sigmas".into(), opts.sigmas),
        ],
        detail: format!("|E[Gamma_T] - nu| = {gap:.5}"),
    })
}

fn sq(x: f64) -> f64 {
    x * x
}

fn doob_report(stats: &EnsembleStats, majorant: f64, k: f64) -> TheoremReport {
    let (hit, se) = stats.hitting_probability();
    TheoremReport {
        id: "doob_bound",
        claim: "P(r_L ever 0) <= 1 - r_L(0)/r_inf",
        passed: hit <= majorant + k * se,
        measured: vec![("hit fraction".into(), hit), ("standard error".into(), se)],
        tolerances: vec![("majorant".into(), majorant), ("sigmas".into(), k)],
        detail: format!("{:.4} observed vs majorant {majorant:.4}", hit),
    }
}

fn envelope_report(
    stats: &EnsembleStats,
    p: &ModelParams,
    opts: &SuiteOptions,
) -> Result<TheoremReport, ModelError> {
    let moments = stats.moments(Observable::Ratio)?;
    let mut checked = 0u32;
    let mut worst = (0.0f64, 0.0);
    for (&t, m) in stats.times().iter().zip(moments) {
        if t <= 0.0 || t > opts.envelope_horizon {
            continue;
        }
        checked += 1;
        let (lo, hi) = relative_std_bounds(p, t);
        let s = m.std();
        let outside = (lo - s).max(s - hi).max(0.0);
        let z = zscore(outside, m.std_sem());
        if z > worst.0 || checked == 1 {
            worst = (z, t);
        }
    }
    let passed = checked > 0 && worst.0 <= opts.sigmas;
    Ok(TheoremReport {
        id: "std_envelope",
        claim: "Std(q_t/V_t) lies between the analytic bounds",
        passed,
        measured: vec![
            ("points checked".into(), checked as f64),
            ("worst excursion (SE)".into(), worst.0),
        ],
        tolerances: vec![
            ("sigmas".into(), opts.sigmas),
            ("horizon".into(), opts.envelope_horizon),
        ],
        detail: if checked == 0 {
            format!("no recorded times in (0, {}]", opts.envelope_horizon)
        } else {
            format!(
                "{checked} recorded times checked; worst at t = {:.3}",
                worst.1
            )
        },
    })
}

fn relative_growth_report(
    stats: &EnsembleStats,
    p: &ModelParams,
    k: f64,
) -> Result<TheoremReport, ModelError> {
    let bound = 1.0 + p.initial_ratio();
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    for (&t, m) in stats
        .times()
        .iter()
        .zip(stats.moments(Observable::RelativeGrowth)?)
    {
        let z = if m.sem() > 0.0 {
            (m.mean - bound) / m.sem()
        } else if m.mean > bound {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        if z > worst.0 {
            worst = (z, t, m.mean);
        }
    }
    Ok(TheoremReport {
        id: "relative_growth_bound",
        claim: "E[(V_t/V0)/(S_t/S0)] <= 1 + q0/V0",
        passed: worst.0 <= k,
        measured: vec![
            ("largest mean".into(), worst.2),
            ("(mean - bound)/SE".into(), worst.0),
        ],
        tolerances: vec![("bound".into(), bound), ("sigmas".into(), k)],
        detail: format!(
            "largest mean {:.4} vs bound {bound:.4} ({:.2} SE) at t = {:.3}",
            worst.2, worst.0, worst.1
        ),
    })
}
