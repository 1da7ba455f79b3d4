//! Subcommand implementations. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use callmoney_core::analysis::{kde_grid, KDE_POINTS};
use callmoney_core::model::demand_quantity;
use callmoney_core::{
    derive_params, doob_majorant, epanechnikov_kde, relative_std_bounds, simulate_path,
    theorem_suite, EnsembleSpec, EnsembleStats, MarketState, Observable, Path as SamplePath,
    RngStream, TheoremReport,
};

use crate::csv::{num, Csv};
use crate::error::CliError;
use crate::manifest::{ExperimentManifest, ManifestLayer};
use crate::parallel;

/// Baseline economy used whenever a run does not say otherwise.
fn baseline(name: &str) -> ManifestLayer {
    ManifestLayer {
        name: Some(name.into()),
        nu: Some(0.09),
        sigma: Some(0.15),
        q0: Some(1.0),
        v0: Some(1.0),
        s0: Some(1.0),
        ..Default::default()
    }
}

fn grid(mut layer: ManifestLayer, horizon: f64, steps: u64, paths: u64) -> ManifestLayer {
    layer.horizon = Some(horizon);
    layer.steps = Some(steps);
    layer.paths = Some(paths);
    layer
}

/// Defaults for `simulate`: one decade at 50,000 steps, every step recorded.
pub fn simulate_defaults() -> ManifestLayer {
    let mut l = grid(baseline("simulate"), 10.0, 50_000, 1);
    l.record_every = Some(1);
    l
}

pub fn ensemble_defaults() -> ManifestLayer {
    grid(baseline("ensemble"), 100.0, 10_000, 1_000)
}

pub fn table1_defaults() -> ManifestLayer {
    grid(baseline("table1"), 200.0, 25_000, 25_000)
}

/// Reduced-scale verification ensemble, recorded every 0.1 years.
pub fn verify_defaults() -> ManifestLayer {
    let mut l = grid(baseline("verify"), 100.0, 10_000, 5_000);
    l.record_every = Some(10);
    l
}

fn path_of(m: &ExperimentManifest, path_index: u64) -> Result<SamplePath, CliError> {
    Ok(simulate_path(
        &m.params,
        &m.sim,
        RngStream::new(m.seed, path_index),
    )?)
}

fn ensemble_of(
    m: &ExperimentManifest,
    observables: &[Observable],
) -> Result<EnsembleStats, CliError> {
    let spec = EnsembleSpec::new(m.params, m.sim, m.paths, m.seed, observables)?
        .with_coupling(m.coupling());
    Ok(parallel::run_ensemble(&spec)?)
}

fn write(
    csv_for: impl FnOnce(&ExperimentManifest) -> Result<Csv, CliError>,
    m: &ExperimentManifest,
    out: &Path,
    file: &str,
) -> Result<PathBuf, CliError> {
    let mut m = m.clone();
    m.outputs = vec![file.to_owned()];
    csv_for(&m)?.write(out, file)
}

/// Observables evaluated along a recorded path.
fn path_states(path: &SamplePath) -> impl Iterator<Item = MarketState> + '_ {
    path.grid.iter().map(|pt| {
        MarketState::from_logs(
            pt.t,
            pt.log_s,
            pt.log_v,
            pt.log_q,
            pt.integral,
            false,
            &path.params,
        )
    })
}

const PATH_COLUMNS: [&str; 11] = [
    "t",
    "S",
    "V",
    "q",
    "R",
    "r_L",
    "b",
    "Gamma",
    "V_over_S",
    "q_over_S",
    "wealth_over_S",
];

fn path_csv(command: &str, m: &ExperimentManifest, path: &SamplePath) -> Csv {
    let p = &path.params;
    let mut csv = Csv::new(command, m);
    csv.note(&format!("hit_zero={}", path.hit_zero));
    csv.columns(&PATH_COLUMNS);
    for s in path_states(path) {
        let (sv, vv, qv) = (s.log_s.exp(), s.log_v.exp(), s.log_q.exp());
        csv.row(&[
            s.t,
            sv,
            vv,
            qv,
            s.ratio(),
            s.r_l,
            s.b,
            s.growth(p),
            vv / sv,
            qv / sv,
            (qv + vv) / sv,
        ]);
    }
    csv
}

pub fn simulate(m: &ExperimentManifest, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let path = path_of(m, 0)?;
    let file = format!("{}_path.csv", m.name);
    Ok(vec![write(
        |m| Ok(path_csv("simulate", m, &path)),
        m,
        out,
        &file,
    )?])
}

fn moments_csv(
    command: &str,
    m: &ExperimentManifest,
    stats: &EnsembleStats,
    observables: &[Observable],
) -> Result<Csv, CliError> {
    let mut names = vec!["t".to_owned()];
    for o in observables {
        names.push(format!("mean_{o}"));
        names.push(format!("std_{o}"));
        names.push(format!("se_{o}"));
    }
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut csv = Csv::new(command, m);
    let (p_hit, se_hit) = stats.hitting_probability();
    csv.note(&format!("paths={}", stats.n_paths()))
        .note(&format!(
            "hit_probability={} se={}",
            num(p_hit),
            num(se_hit)
        ))
        .columns(&names);
    let series = observables
        .iter()
        .map(|&o| stats.moments(o))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, &t) in stats.times().iter().enumerate() {
        let mut row = vec![t];
        for s in &series {
            row.extend([s[i].mean, s[i].std(), s[i].sem()]);
        }
        csv.row(&row);
    }
    Ok(csv)
}

pub fn ensemble(m: &ExperimentManifest, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let stats = ensemble_of(m, &Observable::ALL)?;
    let moments = write(
        |m| moments_csv("ensemble", m, &stats, &Observable::ALL),
        m,
        out,
        &format!("{}_moments.csv", m.name),
    )?;
    let terminal = write(
        |m| {
            let mut csv = Csv::new("ensemble", m);
            let mut names = vec!["path"];
            names.extend(Observable::ALL.iter().map(|o| o.name()));
            csv.columns(&names);
            let cols = Observable::ALL
                .iter()
                .map(|&o| stats.terminal_samples(o))
                .collect::<Result<Vec<_>, _>>()?;
            for i in 0..stats.n_paths() as usize {
                let mut cells = vec![i.to_string()];
                cells.extend(cols.iter().map(|c| num(c[i])));
                csv.cells(&cells);
            }
            Ok(csv)
        },
        m,
        out,
        &format!("{}_terminal.csv", m.name),
    )?;
    Ok(vec![moments, terminal])
}

/// `(sigma, nu)` rows of the zero-rate hitting table.
pub const TABLE1_ROWS: [(f64, f64); 15] = [
    (0.10, 0.09),
    (0.15, 0.09),
    (0.20, 0.09),
    (0.10, 0.08),
    (0.15, 0.08),
    (0.20, 0.08),
    (0.10, 0.07),
    (0.15, 0.07),
    (0.20, 0.07),
    (0.10, 0.06),
    (0.15, 0.06),
    (0.20, 0.06),
    (0.10, 0.05),
    (0.15, 0.05),
    (0.20, 0.05),
];

/// One computed row of the hitting table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitRow {
    pub sigma: f64,
    pub nu: f64,
    pub r_l0: f64,
    pub r_inf: f64,
    pub majorant: f64,
    pub estimate: f64,
    pub se: f64,
}

pub fn table1_rows(m: &ExperimentManifest) -> Result<Vec<HitRow>, CliError> {
    TABLE1_ROWS
        .iter()
        .map(|&(sigma, nu)| {
            let p = derive_params(m.q0, m.v0, m.s0, nu, sigma, !m.permissive)?;
            let majorant = doob_majorant(&p)?;
            let tally = parallel::run_hit_tally(&p, &m.sim, m.paths, m.seed)?;
            let (estimate, se) = tally.hitting_probability();
            Ok(HitRow {
                sigma,
                nu,
                r_l0: callmoney_core::model::equilibrium_rate(p.initial_ratio(), &p)?,
                r_inf: p.r_inf,
                majorant,
                estimate,
                se,
            })
        })
        .collect()
}

pub fn table1(m: &ExperimentManifest, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = table1_rows(m)?;
    let file = write(
        |m| {
            let mut csv = Csv::new("table1", m);
            csv.columns(&[
                "sigma",
                "nu",
                "r_L0",
                "r_inf",
                "majorant",
                "mc_estimate",
                "mc_se",
            ]);
            for r in &rows {
                csv.row(&[r.sigma, r.nu, r.r_l0, r.r_inf, r.majorant, r.estimate, r.se]);
            }
            Ok(csv)
        },
        m,
        out,
        "table1.csv",
    )?;
    Ok(vec![file])
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Runs the verification ensemble and the theorem suite, writing
/// `verify.csv`. The caller turns failed reports into an exit status.
pub fn verify(
    m: &ExperimentManifest,
    out: &Path,
) -> Result<(Vec<TheoremReport>, PathBuf), CliError> {
    let stats = ensemble_of(m, &Observable::ALL)?;
    let reports = theorem_suite(&stats, &m.params)?;
    let file = write(
        |m| {
            let mut csv = Csv::new("verify", m);
            csv.columns(&["id", "passed", "claim", "measured", "tolerances", "detail"]);
            for r in &reports {
                let pairs = |v: &[(String, f64)]| {
                    v.iter()
                        .map(|(k, x)| format!("{k}={}", num(*x)))
                        .collect::<Vec<_>>()
                        .join(";")
                };
                csv.cells(&[
                    r.id.to_owned(),
                    r.passed.to_string(),
                    quote(r.claim),
                    quote(&pairs(&r.measured)),
                    quote(&pairs(&r.tolerances)),
                    quote(&r.detail),
                ]);
            }
            Ok(csv)
        },
        m,
        out,
        "verify.csv",
    )?;
    Ok((reports, file))
}

/// Figure sub-runs: `(file stem, defaults)`.
fn figure_layer(n: u8, part: &str) -> ManifestLayer {
    let b = baseline(&format!("fig{n}_{part}"));
    let mut l = match (n, part) {
        (1, _) => grid(b, 10.0, 50_000, 1),
        (2, "path") => grid(b, 100.0, 50_000, 1),
        (2, _) => grid(b, 100.0, 50_000, 50_000),
        (3, "path") => grid(b, 30.0, 40_000, 1),
        (3, _) => grid(b, 30.0, 40_000, 40_000),
        (4, "path") => grid(b, 100.0, 100_000, 1),
        (4, _) => grid(b, 2.0, 100_000, 100_000),
        (5, _) => grid(b, 200.0, 200_000, 1),
        (6, "path") => grid(b, 100.0, 100_000, 1),
        (6, _) => grid(b, 300.0, 30_000, 10_000),
        _ => grid(b, 200.0, 25_000, 100_000),
    };
    if n == 6 {
        l.nu = Some(0.08);
        l.sigma = Some(0.2);
    }
    l
}

/// Bandwidth of the relative growth factor density.
pub const FIG7_BANDWIDTH: f64 = 0.0193;

/// Writes the data behind figure `n`. `user` (config file plus flags) is
/// laid over each sub-run's defaults.
pub fn figure(n: u8, user: &ManifestLayer, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let run = |part: &str| figure_layer(n, part).overlay(user).build();
    let command = format!("figure {n}");
    let command = command.as_str();
    let path_file = |m: &ExperimentManifest,
                     columns: &[&str],
                     f: &dyn Fn(&MarketState) -> Vec<f64>|
     -> Result<PathBuf, CliError> {
        let path = path_of(m, 0)?;
        write(
            |m| {
                let mut csv = Csv::new(command, m);
                csv.note(&format!("hit_zero={}", path.hit_zero))
                    .columns(columns);
                for s in path_states(&path) {
                    csv.row(&f(&s));
                }
                Ok(csv)
            },
            m,
            out,
            &format!("fig{n}_path.csv"),
        )
    };
    let moments_file = |m: &ExperimentManifest, obs: &[Observable]| -> Result<PathBuf, CliError> {
        let stats = ensemble_of(m, obs)?;
        write(
            |m| moments_csv(command, m, &stats, obs),
            m,
            out,
            &format!("fig{n}_moments.csv"),
        )
    };
    match n {
        1 => {
            let m = run("path")?;
            let p = m.params;
            let path = path_of(&m, 0)?;
            let end = path.terminal;
            let (v0, v1) = (p.v0, end.log_v.exp());
            let (q0, q1) = (p.q0, end.log_q.exp());
            let a = path_file(&m, &["t", "q", "r_L", "V", "S"], &|s| {
                vec![s.t, s.log_q.exp(), s.r_l, s.log_v.exp(), s.log_s.exp()]
            })?;
            let b = write(
                |m| {
                    let mut csv = Csv::new(command, m);
                    csv.note(&format!("supply_t0={} supply_T={}", num(q0), num(q1)))
                        .note(&format!("T={}", num(end.t)))
                        .columns(&["r", "demand_t0", "demand_T"]);
                    for i in 0..=200 {
                        let r = p.r_inf * i as f64 / 200.0;
                        csv.row(&[r, demand_quantity(v0, r, &p), demand_quantity(v1, r, &p)]);
                    }
                    Ok(csv)
                },
                &m,
                out,
                "fig1_curves.csv",
            )?;
            Ok(vec![a, b])
        }
        2 => Ok(vec![
            path_file(&run("path")?, &["t", "b", "r_L"], &|s| {
                vec![s.t, s.b, s.r_l]
            })?,
            moments_file(&run("moments")?, &[Observable::Leverage, Observable::Rate])?,
        ]),
        3 => {
            let m = run("path")?;
            let p = m.params;
            Ok(vec![
                path_file(&m, &["t", "Gamma"], &|s| vec![s.t, s.growth(&p)])?,
                moments_file(&run("moments")?, &[Observable::Growth])?,
            ])
        }
        4 => {
            let m = run("path")?;
            let barrier = m.params.b_cap - 1.0;
            let a = path_file(&m, &["t", "R", "barrier"], &|s| {
                vec![s.t, s.ratio(), barrier]
            })?;
            let e = run("std")?;
            let stats = ensemble_of(&e, &[Observable::Ratio])?;
            let b = write(
                |m| {
                    let mut csv = Csv::new(command, m);
                    csv.note(&format!("paths={}", stats.n_paths()))
                        .columns(&["t", "std_R", "se_std_R", "lower", "upper"]);
                    for (&t, mo) in stats.times().iter().zip(stats.moments(Observable::Ratio)?) {
                        let (lo, hi) = relative_std_bounds(&m.params, t);
                        csv.row(&[t, mo.std(), mo.std_sem(), lo, hi]);
                    }
                    Ok(csv)
                },
                &e,
                out,
                "fig4_std.csv",
            )?;
            Ok(vec![a, b])
        }
        5 => {
            let m = run("growth")?;
            let ctx = callmoney_core::stats::ObservableContext::new(&m.params);
            let obs = [
                Observable::RealizedGrowthMoney,
                Observable::RealizedGrowthIndex,
                Observable::RealizedGrowthEquity,
            ];
            Ok(vec![path_file(&m, &["t", "g_q", "g_S", "g_V"], &|s| {
                let mut row = vec![s.t];
                row.extend(obs.iter().map(|&o| ctx.evaluate(o, s)));
                row
            })?])
        }
        6 => {
            let a = path_file(
                &run("path")?,
                &["t", "V_over_S", "wealth_over_S", "q_over_S", "r_L"],
                &|s| {
                    let (v, q) = ((s.log_v - s.log_s).exp(), (s.log_q - s.log_s).exp());
                    vec![s.t, v, v + q, q, s.r_l]
                },
            )?;
            let b = moments_file(
                &run("moments")?,
                &[
                    Observable::EquityInShares,
                    Observable::MoneyInShares,
                    Observable::WealthInShares,
                ],
            )?;
            Ok(vec![a, b])
        }
        7 => {
            let m = run("density")?;
            let stats = ensemble_of(&m, &[Observable::RelativeGrowth])?;
            let samples = stats.terminal_samples(Observable::RelativeGrowth)?;
            let summary = FactorSummary::of(samples);
            let xs = kde_grid(samples, FIG7_BANDWIDTH, KDE_POINTS);
            let kde = epanechnikov_kde(samples, FIG7_BANDWIDTH, &xs)?;
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            let file = write(
                |m| {
                    let mut csv = Csv::new(command, m);
                    csv.note(&format!("bandwidth={}", num(FIG7_BANDWIDTH)))
                        .note(&format!(
                            "paths={} mean={} std={} below_one={} min={} max={}",
                            samples.len(),
                            num(summary.mean),
                            num(summary.std),
                            num(summary.below_one),
                            num(summary.min),
                            num(summary.max)
                        ))
                        .columns(&["x", "density", "cdf"]);
                    for (&x, &d) in kde.grid.iter().zip(&kde.density) {
                        let below = sorted.partition_point(|&s| s <= x);
                        csv.row(&[x, d, below as f64 / sorted.len() as f64]);
                    }
                    Ok(csv)
                },
                &m,
                out,
                "fig7_density.csv",
            )?;
            Ok(vec![file])
        }
        _ => Err(CliError::Usage(format!("unknown figure {n}, expected 1-7"))),
    }
}

/// Summary statistics of terminal relative growth factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorSummary {
    pub mean: f64,
    pub std: f64,
    pub below_one: f64,
    pub min: f64,
    pub max: f64,
}

impl FactorSummary {
    pub fn of(samples: &[f64]) -> FactorSummary {
        let mut m = callmoney_core::Moments::default();
        for &x in samples {
            m.push(x);
        }
        let below = samples.iter().filter(|&&x| x < 1.0).count();
        FactorSummary {
            mean: m.mean,
            std: m.std(),
            below_one: below as f64 / samples.len() as f64,
            min: m.min,
            max: m.max,
        }
    }
}
