//! Subcommand bodies. Each returns the tables it produced; writing them is
//! left to the caller.

use std::collections::BTreeMap;

use ladder_core::analysis::{
    compare_contributions, fit_scaling, linear_onset, FitModel, FitPoint, FitRange, FitResult,
};
use ladder_core::engine::{
    ensemble_average, run_ensemble, scan_phase_diagram, Checkpoint, Observable, RunConfig, ScanGrid, ScanRow,
    TrajectoryStats,
};
use ladder_core::lattice::LadderParams;
use ladder_core::nonmarkov::{blp_measure, quadratic_measure, PairMode};

use crate::config::{parse_observable, Config};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

#[derive(Debug, Clone)]
pub struct Artifact {
    pub stem: String,
    pub description: String,
    pub table: Table,
}

impl Artifact {
    pub fn new(stem: impl Into<String>, description: impl Into<String>, table: Table) -> Self {
        Artifact { stem: stem.into(), description: description.into(), table }
    }
}

pub const STATS_COLUMNS: [&str; 4] = ["mean", "ci95_low", "ci95_high", "n_traj"];

pub fn stats_cells(s: &TrajectoryStats) -> Vec<Cell> {
    vec![s.mean.into(), s.ci95_low.into(), s.ci95_high.into(), s.n.into()]
}

fn columns(prefix: &[&str], suffix: &[&str]) -> Vec<String> {
    prefix.iter().chain(suffix).map(|s| s.to_string()).collect()
}

/// Per-trajectory values and ensemble summaries of `observables`.
pub fn ensemble_tables(
    params: &LadderParams,
    run: &RunConfig,
    observables: &[Observable],
    checkpoint: Option<&Checkpoint>,
) -> Result<(Table, Table, Vec<TrajectoryStats>)> {
    let values = run_ensemble(params, run, observables, checkpoint)?;
    let mut per_traj =
        Table::new(std::iter::once("trajectory".to_string()).chain(observables.iter().map(|o| o.to_string())));
    for alpha in 0..run.n_traj {
        let mut row = vec![Cell::from(alpha)];
        row.extend(values.iter().map(|v| Cell::from(v[alpha])));
        per_traj.push(row);
    }
    let mut summary = Table::new(columns(&["observable"], &STATS_COLUMNS));
    let mut stats = Vec::new();
    for (obs, v) in observables.iter().zip(&values) {
        let s = ensemble_average(v)?;
        let mut row = vec![Cell::from(obs.to_string())];
        row.extend(stats_cells(&s));
        summary.push(row);
        stats.push(s);
    }
    Ok((per_traj, summary, stats))
}

pub fn trajectory(cfg: &Config, checkpoint: Option<&Checkpoint>) -> Result<Vec<Artifact>> {
    let specs =
        cfg.file.trajectory.as_ref().map(|t| t.observables.clone()).unwrap_or_else(|| vec!["entropy:L/2".to_string()]);
    let observables = specs
        .iter()
        .map(|s| parse_observable(s, cfg.params.l).map_err(|e| CliError::config("trajectory.observables", e)))
        .collect::<Result<Vec<_>>>()?;
    let (per_traj, summary, _) = ensemble_tables(&cfg.params, &cfg.run, &observables, checkpoint)?;
    Ok(vec![
        Artifact::new("trajectories", "time-averaged observables of every trajectory", per_traj),
        Artifact::new("summary", "trajectory-averaged observables with 95% bootstrap intervals", summary),
    ])
}

pub const SCAN_COLUMNS: [&str; 13] = [
    "t12",
    "t2",
    "quarter_mean",
    "quarter_ci95_low",
    "quarter_ci95_high",
    "half_mean",
    "half_ci95_low",
    "half_ci95_high",
    "delta",
    "delta_ci95_low",
    "delta_ci95_high",
    "n_traj",
    "p",
];

pub fn scan_table(rows: &[ScanRow], p: f64) -> Table {
    let mut t = Table::new(SCAN_COLUMNS);
    for r in rows {
        t.push(vec![
            r.t12.into(),
            r.t2.into(),
            r.quarter.mean.into(),
            r.quarter.ci95_low.into(),
            r.quarter.ci95_high.into(),
            r.half.mean.into(),
            r.half.ci95_low.into(),
            r.half.ci95_high.into(),
            r.delta.into(),
            r.delta_ci95.map(|c| c.0).into(),
            r.delta_ci95.map(|c| c.1).into(),
            r.half.n.into(),
            p.into(),
        ]);
    }
    t
}

pub fn scan(cfg: &Config, checkpoint: Option<&Checkpoint>) -> Result<Vec<Artifact>> {
    let s = cfg.file.scan.as_ref().ok_or_else(|| CliError::config("scan", "the scan command needs a [scan] table"))?;
    let grid = ScanGrid { t12: s.t12.values(), t2: s.t2.values() };
    let rows = scan_phase_diagram(&grid, &cfg.params, &cfg.run, s.quantity, checkpoint)?;
    Ok(vec![Artifact::new(
        "scan",
        "quarter- and half-system averages and delta = 1 - Q(L/4)/Q(L/2) on the (t12, t2) grid",
        scan_table(&rows, cfg.params.p),
    )])
}

pub fn negativity(cfg: &Config, checkpoint: Option<&Checkpoint>) -> Result<Vec<Artifact>> {
    let l = cfg.params.l;
    let lengths = cfg.file.negativity.as_ref().and_then(|n| n.lengths.clone()).unwrap_or_else(|| (1..=l / 2).collect());
    if lengths.is_empty() {
        return Err(CliError::config("negativity.lengths", "no lengths given"));
    }
    if let Some(bad) = lengths.iter().find(|&&x| x == 0 || x > l) {
        return Err(CliError::config("negativity.lengths", format!("length {bad} outside 1..={l}")));
    }
    let observables: Vec<Observable> = lengths.iter().map(|&len| Observable::Negativity { len }).collect();
    let (per_traj, _, stats) = ensemble_tables(&cfg.params, &cfg.run, &observables, checkpoint)?;
    let mut summary = Table::new(columns(&["l_A"], &STATS_COLUMNS));
    for (len, s) in lengths.iter().zip(&stats) {
        let mut row = vec![Cell::from(*len)];
        row.extend(stats_cells(s));
        summary.push(row);
    }
    Ok(vec![
        Artifact::new("negativity_trajectories", "time-averaged negativity of every trajectory", per_traj),
        Artifact::new("negativity", "trajectory-averaged negativity against subsystem length", summary),
    ])
}

pub fn blp_tables(
    params: &LadderParams,
    n_pairs: usize,
    t_max: usize,
    mode: PairMode,
    seed: u64,
) -> Result<(Table, Table)> {
    let r = blp_measure(params, n_pairs, t_max, mode, seed)?;
    let mut summary =
        Table::new(["t12", "t2", "p", "n_phi", "best_pair", "n_norm", "best_norm_pair", "n_pairs", "t_max"]);
    summary.push(vec![
        params.t12.into(),
        params.t2.into(),
        params.p.into(),
        r.n_phi.into(),
        r.best_pair.into(),
        r.n_norm.into(),
        r.best_norm_pair.into(),
        n_pairs.into(),
        t_max.into(),
    ]);
    let mut series = Table::new(["pair", "t", "reduced_distance", "full_distance"]);
    for s in &r.series {
        for (t, (a, b)) in s.reduced.iter().zip(&s.full).enumerate() {
            series.push(vec![s.pair_id.into(), t.into(), (*a).into(), (*b).into()]);
        }
    }
    Ok((summary, series))
}

pub fn blp(cfg: &Config) -> Result<Vec<Artifact>> {
    let b = cfg.file.blp.as_ref().ok_or_else(|| CliError::config("blp", "the blp command needs a [blp] table"))?;
    let mode = b.pair_mode.unwrap_or(PairMode::OrthogonalPure);
    let (summary, series) = blp_tables(&cfg.params, b.n_pairs, b.t_max, mode, cfg.run.base_seed)?;
    Ok(vec![
        Artifact::new("blp", "trace-distance non-Markovianity and its normalized variant", summary),
        Artifact::new("blp_series", "inner-chain and full trace distance of every initial pair", series),
    ])
}

pub fn d2_tables(
    params: &LadderParams,
    n_pairs: usize,
    n_traj: usize,
    t_max: usize,
    mode: PairMode,
    seed: u64,
) -> Result<(Table, Table)> {
    let r = quadratic_measure(params, n_pairs, n_traj, t_max, mode, seed)?;
    let mut summary = Table::new(["t12", "t2", "p", "n_measure", "best_pair", "n_pairs", "n_traj", "t_max"]);
    summary.push(vec![
        params.t12.into(),
        params.t2.into(),
        params.p.into(),
        r.n.into(),
        r.best_pair.into(),
        n_pairs.into(),
        n_traj.into(),
        t_max.into(),
    ]);
    let mut series = Table::new(["pair", "t", "d2", "best"]);
    for (k, s) in r.series.iter().enumerate() {
        for (t, v) in s.iter().enumerate() {
            series.push(vec![k.into(), t.into(), (*v).into(), usize::from(k == r.best_pair).into()]);
        }
    }
    Ok((summary, series))
}

pub fn d2(cfg: &Config) -> Result<Vec<Artifact>> {
    let d = cfg.file.d2.as_ref().ok_or_else(|| CliError::config("d2", "the d2 command needs a [d2] table"))?;
    let mode = d.pair_mode.unwrap_or(PairMode::OrthogonalPure);
    let (summary, series) = d2_tables(&cfg.params, d.n_pairs, d.n_traj, d.t_max, mode, cfg.run.base_seed)?;
    Ok(vec![
        Artifact::new("d2", "quadratic-distance non-Markovianity", summary),
        Artifact::new("d2_series", "quadratic distance of the averaged inner-chain states for every pair", series),
    ])
}

pub const FIT_COLUMNS: [&str; 12] = [
    "group",
    "model",
    "l_min",
    "l_max",
    "gamma",
    "c",
    "beta",
    "linear_term",
    "log_term",
    "rss",
    "n_points",
    "weighted",
];

pub fn fit_row(group: Cell, fit: &FitResult) -> Vec<Cell> {
    let (lin, log) = compare_contributions(fit);
    vec![
        group,
        model_name(fit.model).into(),
        fit.l_min.into(),
        fit.l_max.into(),
        fit.gamma.into(),
        fit.c.into(),
        fit.beta.into(),
        lin.into(),
        log.into(),
        fit.rss.into(),
        fit.n_points.into(),
        usize::from(fit.weighted).into(),
    ]
}

pub fn model_name(model: FitModel) -> String {
    serde_json::to_value(model).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Reads `L, mean[, ci95_low, ci95_high][, t2]` rows into fit points grouped by `t2`.
pub fn load_fit_points(table: &Table, weighted: bool) -> Result<BTreeMap<u64, (f64, Vec<FitPoint>)>> {
    let ls = table.numbers("L")?;
    let means = table.numbers("mean")?;
    let group = table.column_index("t2").map(|_| table.numbers("t2")).transpose()?;
    let bounds = if weighted { Some((table.numbers("ci95_low")?, table.numbers("ci95_high")?)) } else { None };
    let mut out: BTreeMap<u64, (f64, Vec<FitPoint>)> = BTreeMap::new();
    for i in 0..table.len() {
        let (Some(l), Some(v)) = (ls[i], means[i]) else {
            return Err(CliError::Output(format!("row {i}: L and mean are required")));
        };
        let mut pt = FitPoint::new(l, v);
        if let Some((lo, hi)) = &bounds {
            let w = hi[i].zip(lo[i]).map(|(h, l)| h - l).filter(|w| *w > 0.0);
            pt.weight = w.map_or(1.0, |w| 1.0 / (w * w));
        }
        let g = group.as_ref().and_then(|g| g[i]).unwrap_or(f64::NAN);
        out.entry(g.to_bits()).or_insert_with(|| (g, Vec::new())).1.push(pt);
    }
    Ok(out)
}

pub fn fit(cfg: &Config) -> Result<Vec<Artifact>> {
    let f = cfg.file.fit.as_ref().ok_or_else(|| CliError::config("fit", "the fit command needs a [fit] table"))?;
    let path = cfg.base_dir.join(&f.input);
    let table = Table::read_csv(&path)?;
    let groups = load_fit_points(&table, f.weighted)?;
    let mut ordered: Vec<(f64, Vec<FitPoint>)> = groups.into_values().collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut fits = Table::new(FIT_COLUMNS);
    let mut onset = Table::new(["l_min", "l_max", "t2_lin"]);
    for [lo, hi] in &f.ranges {
        let range = FitRange::new(*lo, *hi)?;
        let mut per_t2 = Vec::new();
        for (g, pts) in &ordered {
            let r = fit_scaling(pts, range, f.model)?;
            fits.push(fit_row(if g.is_nan() { Cell::Empty } else { (*g).into() }, &r));
            if !g.is_nan() {
                per_t2.push((*g, r));
            }
        }
        if per_t2.len() > 1 {
            onset.push(vec![(*lo).into(), (*hi).into(), linear_onset(&per_t2).into()]);
        }
    }
    let mut out = vec![Artifact::new("fits", "least-squares scaling fits for every group and fit range", fits)];
    if !onset.is_empty() {
        out.push(Artifact::new("onset", "smallest t2 at which the linear term reaches the log term", onset));
    }
    Ok(out)
}
