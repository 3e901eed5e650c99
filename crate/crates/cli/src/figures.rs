//! Desk-scale reproductions of the published figures.
//!
//! `scale` multiplies every trajectory and pair count; sizes and grids are
//! fixed per target.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use ladder_core::analysis::{
    fit_eta_powerlaw, fit_negativity_scaling, fit_scaling, linear_onset, residual_comparison, ArcPair, FitModel,
    FitPoint, FitRange,
};
use ladder_core::engine::{
    ensemble_average, run_ensemble, scan_phase_diagram, Checkpoint, InitKind, Observable, RunConfig, ScanGrid,
    ScanQuantity,
};
use ladder_core::lattice::LadderParams;
use ladder_core::nonmarkov::{quadratic_measure, PairMode};
use serde_json::json;

use crate::commands::{blp_tables, fit_row, model_name, scan_table, stats_cells, Artifact, FIT_COLUMNS, STATS_COLUMNS};
use crate::error::{CliError, Result};
use crate::manifest::FigureInfo;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    EntropyProfile,
    EntropyMap,
    SizeScaling,
    EtaCollapse,
    NegativityProfile,
    NegativityMap,
    BlpMap,
    BlpMapMonitored,
    D2Series,
    NegativityScaling,
    FitRanges,
    Residuals,
}

impl FigureId {
    pub const ALL: [FigureId; 12] = [
        FigureId::EntropyProfile,
        FigureId::EntropyMap,
        FigureId::SizeScaling,
        FigureId::EtaCollapse,
        FigureId::NegativityProfile,
        FigureId::NegativityMap,
        FigureId::BlpMap,
        FigureId::BlpMapMonitored,
        FigureId::D2Series,
        FigureId::NegativityScaling,
        FigureId::FitRanges,
        FigureId::Residuals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::EntropyProfile => "entropy-profile",
            FigureId::EntropyMap => "entropy-map",
            FigureId::SizeScaling => "size-scaling",
            FigureId::EtaCollapse => "eta-collapse",
            FigureId::NegativityProfile => "negativity-profile",
            FigureId::NegativityMap => "negativity-map",
            FigureId::BlpMap => "blp-map",
            FigureId::BlpMapMonitored => "blp-map-monitored",
            FigureId::D2Series => "d2-series",
            FigureId::NegativityScaling => "negativity-scaling",
            FigureId::FitRanges => "fit-ranges",
            FigureId::Residuals => "residuals",
        }
    }

    /// What the published panel shows.
    pub fn anchor(self) -> &'static str {
        match self {
            FigureId::EntropyProfile => {
                "averaged entanglement entropy against subsystem length at t2 = 1, p = 1, for t12 = pi/2 (flat) and t12 = pi (dome)"
            }
            FigureId::EntropyMap => "delta S = 1 - S(L/4)/S(L/2) over t12 in [0, 2pi] and t2 in [0, 5] at p = 1",
            FigureId::SizeScaling => "half-system entropy and opposing-arc mutual information against L at t12 = pi/2, p = 1",
            FigureId::EtaCollapse => "mutual information of two equal arcs against the cross ratio eta with the power-law fit for Delta",
            FigureId::NegativityProfile => "averaged fermionic negativity against subsystem length at t12 = pi/2, t2 = 5 for several p",
            FigureId::NegativityMap => "delta E = 1 - E(L/4)/E(L/2) over (t12, t2) for p = 0.25, 0.5, 0.75",
            FigureId::BlpMap => "trace-distance non-Markovianity and its normalized variant over (t12, t2) at p = 1, L = 4",
            FigureId::BlpMapMonitored => "trace-distance non-Markovianity over (t12, t2) for p = 0.25, 0.5, 0.75",
            FigureId::D2Series => "quadratic distance of the best initial pairs against time, L = 8, t12 = pi/2",
            FigureId::NegativityScaling => "half-system negativity against L with the negativity-ansatz fits",
            FigureId::FitRanges => "linear and logarithmic contributions of the entropy fit for several fit ranges against t2",
            FigureId::Residuals => "residuals of linear-only and log-only fits of the half-system negativity",
        }
    }

    fn published_scale(self) -> &'static str {
        match self {
            FigureId::EntropyProfile | FigureId::EtaCollapse => "L = 128, 1000 trajectories",
            FigureId::EntropyMap => "L = 64, dense grid, up to 1000 trajectories",
            FigureId::SizeScaling | FigureId::FitRanges => "L up to 128, 400 to 1000 trajectories",
            FigureId::NegativityProfile => "L = 64, 400 to 1000 trajectories",
            FigureId::NegativityMap => "L = 64, dense grid",
            FigureId::BlpMap | FigureId::BlpMapMonitored => "L = 4, dense grid, 100 pairs, 100 cycles",
            FigureId::D2Series => "about 300 pairs, 100 cycles",
            FigureId::NegativityScaling | FigureId::Residuals => "L up to 128, 400 to 1000 trajectories",
        }
    }

    fn desk_scale(self) -> &'static str {
        match self {
            FigureId::EntropyProfile => "L = 32, 100 trajectories",
            FigureId::EntropyMap => "L = 16, 9 x 9 grid, 150 trajectories",
            FigureId::SizeScaling => "L in {8, 16, 32}, t2 in {1.5, 3, 5}, 100 trajectories",
            FigureId::EtaCollapse => "L = 32, t2 in {1.5, 3, 5}, 50 trajectories",
            FigureId::NegativityProfile => "L = 32, 50 trajectories",
            FigureId::NegativityMap => "L = 16, 9 x 9 grid, 50 trajectories",
            FigureId::BlpMap | FigureId::BlpMapMonitored => "L = 4, 5 x 5 grid, 10 pairs, 50 cycles",
            FigureId::D2Series => "t2 in {1, 5}, p in {0.25, 0.75}, 5 pairs, 20 trajectories, 50 cycles",
            FigureId::NegativityScaling => "L in {8, 16, 24, 32}, 50 trajectories",
            FigureId::FitRanges => {
                "L in {8, ..., 64}, 12 t2 values in [1, 10], ranges up to L_max = 64, 20 trajectories"
            }
            FigureId::Residuals => "L in {8, ..., 40}, 50 trajectories",
        }
    }

    pub fn info(self, scale: f64) -> FigureInfo {
        FigureInfo {
            id: self.name().to_string(),
            anchor: self.anchor().to_string(),
            scale,
            deviation: format!(
                "published: {}; here: {} with trajectory and pair counts multiplied by {scale}",
                self.published_scale(),
                self.desk_scale()
            ),
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<&str> = FigureId::ALL.iter().map(|f| f.name()).collect();
            CliError::Usage(format!("unknown figure `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// Everything a reproduction produced.
#[derive(Debug, Clone)]
pub struct Reproduction {
    pub artifacts: Vec<Artifact>,
    pub info: FigureInfo,
    pub settings: serde_json::Value,
}

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(2)
}

fn run_cfg(n_traj: usize, seed: u64) -> RunConfig {
    RunConfig { t_st: 100, m: 5, n_traj, base_seed: seed, init: InitKind::RandomHalfFilling }
}

fn with_stats(mut prefix: Vec<Cell>, s: &ladder_core::engine::TrajectoryStats) -> Vec<Cell> {
    prefix.extend(stats_cells(s));
    prefix
}

fn cols(prefix: &[&str]) -> Vec<String> {
    prefix.iter().chain(STATS_COLUMNS.iter()).map(|s| s.to_string()).collect()
}

pub fn reproduce(id: FigureId, scale: f64, seed: u64, checkpoint: Option<&Checkpoint>) -> Result<Reproduction> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Usage(format!("scale must be positive, got {scale}")));
    }
    let (artifacts, settings) = match id {
        FigureId::EntropyProfile => entropy_profile(scale, seed, checkpoint)?,
        FigureId::EntropyMap => delta_maps(ScanQuantity::DeltaS, &[1.0], 150, scale, seed, checkpoint)?,
        FigureId::SizeScaling => size_scaling(scale, seed)?,
        FigureId::EtaCollapse => eta_collapse(scale, seed)?,
        FigureId::NegativityProfile => negativity_profile(scale, seed)?,
        FigureId::NegativityMap => delta_maps(ScanQuantity::DeltaE, &[0.25, 0.5, 0.75], 50, scale, seed, checkpoint)?,
        FigureId::BlpMap => blp_map(&[1.0], scale, seed)?,
        FigureId::BlpMapMonitored => blp_map(&[0.25, 0.5, 0.75], scale, seed)?,
        FigureId::D2Series => d2_series(scale, seed)?,
        FigureId::NegativityScaling => negativity_scaling(scale, seed)?,
        FigureId::FitRanges => fit_ranges(scale, seed)?,
        FigureId::Residuals => residuals(scale, seed)?,
    };
    Ok(Reproduction { artifacts, info: id.info(scale), settings })
}

type Out = (Vec<Artifact>, serde_json::Value);

fn entropy_profile(scale: f64, seed: u64, checkpoint: Option<&Checkpoint>) -> Result<Out> {
    let l = 32;
    let run = run_cfg(scaled(100, scale), seed);
    let lengths: Vec<usize> = (1..=l / 2).collect();
    let obs: Vec<Observable> = lengths.iter().map(|&len| Observable::Entropy { len }).collect();
    let mut t = Table::new(cols(&["t12", "l_A"]));
    for (i, t12) in [FRAC_PI_2, PI].into_iter().enumerate() {
        let cp = checkpoint.map(|c| c.with_key(format!("t12_{i}")));
        let values = run_ensemble(&LadderParams::new(l, 1.0, t12, 1.0), &run, &obs, cp.as_ref())?;
        for (len, v) in lengths.iter().zip(&values) {
            t.push(with_stats(vec![t12.into(), (*len).into()], &ensemble_average(v)?));
        }
    }
    Ok((
        vec![Artifact::new("entropy_profile", "averaged entropy against subsystem length", t)],
        json!({ "L": l, "t2": 1.0, "p": 1.0, "t12": [FRAC_PI_2, PI], "run": run }),
    ))
}

fn delta_maps(
    quantity: ScanQuantity,
    ps: &[f64],
    base_traj: usize,
    scale: f64,
    seed: u64,
    checkpoint: Option<&Checkpoint>,
) -> Result<Out> {
    let l = 16;
    let run = run_cfg(scaled(base_traj, scale), seed);
    let grid = ScanGrid { t12: ScanGrid::linspace(0.0, 2.0 * PI, 9), t2: ScanGrid::linspace(0.0, 5.0, 9) };
    let mut table: Option<Table> = None;
    for (i, &p) in ps.iter().enumerate() {
        let cp = checkpoint.map(|c| c.with_key(format!("p{i}")));
        let rows = scan_phase_diagram(&grid, &LadderParams::new(l, 1.0, 0.0, p), &run, quantity, cp.as_ref())?;
        let part = scan_table(&rows, p);
        match table.as_mut() {
            Some(t) => t.rows.extend(part.rows),
            None => table = Some(part),
        }
    }
    let stem = match quantity {
        ScanQuantity::DeltaS => "entropy_map",
        ScanQuantity::DeltaE => "negativity_map",
    };
    Ok((
        vec![Artifact::new(stem, "delta = 1 - Q(L/4)/Q(L/2) on the (t12, t2) grid", table.expect("nonempty p list"))],
        json!({ "L": l, "p": ps, "quantity": quantity, "grid": grid, "run": run }),
    ))
}

fn size_scaling(scale: f64, seed: u64) -> Result<Out> {
    let run = run_cfg(scaled(100, scale), seed);
    let (ls, t2s) = ([8usize, 16, 32], [1.5, 3.0, 5.0]);
    let mut t = Table::new(cols(&["t2", "L", "observable"]));
    for &t2 in &t2s {
        for &l in &ls {
            let obs = [
                Observable::Entropy { len: l / 2 },
                Observable::MutualInformation { len: l / 4 },
                Observable::MutualInformation { len: l / 8 },
            ];
            let names = ["entropy_half", "mutual_information_quarter", "mutual_information_eighth"];
            let values = run_ensemble(&LadderParams::new(l, t2, FRAC_PI_2, 1.0), &run, &obs, None)?;
            for (name, v) in names.iter().zip(&values) {
                t.push(with_stats(vec![t2.into(), l.into(), (*name).into()], &ensemble_average(v)?));
            }
        }
    }
    Ok((
        vec![Artifact::new("size_scaling", "half-system entropy and opposing-arc mutual information against L", t)],
        json!({ "L": ls, "t2": t2s, "t12": FRAC_PI_2, "p": 1.0, "run": run }),
    ))
}

fn eta_collapse(scale: f64, seed: u64) -> Result<Out> {
    let l = 32;
    let run = run_cfg(scaled(50, scale), seed);
    let t2s = [1.5, 3.0, 5.0];
    let pairs: Vec<ArcPair> = (1..l / 2).map(|a| ArcPair { x1: 0, x2: a, x3: l / 2, x4: l / 2 + a }).collect();
    let obs: Vec<Observable> =
        pairs.iter().map(|p| Observable::MutualInformationOf { a1: p.a1(), a2: p.a2() }).collect();
    let mut data = Table::new(cols(&["t2", "l_A", "eta"]));
    let mut fits = Table::new(["t2", "a", "b", "c", "d", "delta", "amplitude", "rss", "converged_starts", "status"]);
    for &t2 in &t2s {
        let values = run_ensemble(&LadderParams::new(l, t2, FRAC_PI_2, 1.0), &run, &obs, None)?;
        let mut points = Vec::new();
        for (pair, v) in pairs.iter().zip(&values) {
            let s = ensemble_average(v)?;
            let eta = pair.eta(l);
            data.push(with_stats(vec![t2.into(), (pair.x2 - pair.x1).into(), eta.into()], &s));
            points.push((eta, s.mean));
        }
        match fit_eta_powerlaw(&points) {
            Ok(f) => fits.push(vec![
                t2.into(),
                f.a.into(),
                f.b.into(),
                f.c.into(),
                f.d.into(),
                f.delta.into(),
                f.amplitude.into(),
                f.rss.into(),
                f.converged_starts.into(),
                "ok".into(),
            ]),
            Err(e) => {
                let mut row = vec![Cell::from(t2)];
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
                row.push(e.to_string().into());
                fits.push(row);
            }
        }
    }
    Ok((
        vec![
            Artifact::new("eta", "mutual information of equal arcs at distance L/2 against the cross ratio", data),
            Artifact::new("eta_fit", "fit of I = a (exp(b eta^c) - 1)^d with Delta = c d", fits),
        ],
        json!({ "L": l, "t2": t2s, "t12": FRAC_PI_2, "p": 1.0, "run": run }),
    ))
}

fn negativity_profile(scale: f64, seed: u64) -> Result<Out> {
    let l = 32;
    let run = run_cfg(scaled(50, scale), seed);
    let ps = [0.25, 0.5, 0.75, 1.0];
    let lengths: Vec<usize> = (1..=l / 2).collect();
    let obs: Vec<Observable> = lengths.iter().map(|&len| Observable::Negativity { len }).collect();
    let mut t = Table::new(cols(&["p", "l_A"]));
    for &p in &ps {
        let values = run_ensemble(&LadderParams::new(l, 5.0, FRAC_PI_2, p), &run, &obs, None)?;
        for (len, v) in lengths.iter().zip(&values) {
            t.push(with_stats(vec![p.into(), (*len).into()], &ensemble_average(v)?));
        }
    }
    Ok((
        vec![Artifact::new("negativity_profile", "averaged negativity against subsystem length", t)],
        json!({ "L": l, "t2": 5.0, "t12": FRAC_PI_2, "p": ps, "run": run }),
    ))
}

fn blp_map(ps: &[f64], scale: f64, seed: u64) -> Result<Out> {
    let l = 4;
    let (n_pairs, t_max) = (scaled(10, scale), 50);
    let grid = ScanGrid { t12: ScanGrid::linspace(0.0, PI, 5), t2: ScanGrid::linspace(0.0, 5.0, 5) };
    let mut map: Option<Table> = None;
    for &p in ps {
        for (t12, t2) in grid.points() {
            let (summary, _) =
                blp_tables(&LadderParams::new(l, t2, t12, p), n_pairs, t_max, PairMode::OrthogonalPure, seed)?;
            match map.as_mut() {
                Some(m) => m.rows.extend(summary.rows),
                None => map = Some(summary),
            }
        }
    }
    Ok((
        vec![Artifact::new(
            "blp_map",
            "trace-distance non-Markovianity on the (t12, t2) grid",
            map.expect("nonempty grid"),
        )],
        json!({ "L": l, "p": ps, "grid": grid, "n_pairs": n_pairs, "t_max": t_max, "pair_mode": PairMode::OrthogonalPure, "seed": seed }),
    ))
}

fn d2_series(scale: f64, seed: u64) -> Result<Out> {
    let l = 8;
    let (n_pairs, n_traj, t_max) = (scaled(5, scale), scaled(20, scale), 50);
    let mut summary = Table::new(["t2", "p", "n_measure", "best_pair"]);
    let mut series = Table::new(["t2", "p", "t", "d2"]);
    for t2 in [1.0, 5.0] {
        for p in [0.25, 0.75] {
            let params = LadderParams::new(l, t2, FRAC_PI_2, p);
            let r = quadratic_measure(&params, n_pairs, n_traj, t_max, PairMode::OrthogonalPure, seed)?;
            summary.push(vec![t2.into(), p.into(), r.n.into(), r.best_pair.into()]);
            for (t, v) in r.series[r.best_pair].iter().enumerate() {
                series.push(vec![t2.into(), p.into(), t.into(), (*v).into()]);
            }
        }
    }
    Ok((
        vec![
            Artifact::new("d2_summary", "quadratic-distance non-Markovianity per parameter set", summary),
            Artifact::new("d2_series", "quadratic distance of the best pair against time", series),
        ],
        json!({ "L": l, "t12": FRAC_PI_2, "t2": [1.0, 5.0], "p": [0.25, 0.75], "n_pairs": n_pairs, "n_traj": n_traj, "t_max": t_max, "seed": seed }),
    ))
}

/// `Q_{L/2}` stats for every `(t2, p, L)`; rows of `t2, p, L, stats`.
pub fn half_system_sweep(
    kind: fn(usize) -> Observable,
    ls: &[usize],
    t2s: &[f64],
    p: f64,
    run: &RunConfig,
) -> Result<(Table, Vec<(f64, Vec<FitPoint>)>)> {
    let mut t = Table::new(cols(&["t2", "p", "L"]));
    let mut groups = Vec::new();
    for &t2 in t2s {
        let mut pts = Vec::new();
        for &l in ls {
            let v = run_ensemble(&LadderParams::new(l, t2, FRAC_PI_2, p), run, &[kind(l / 2)], None)?;
            let s = ensemble_average(&v[0])?;
            t.push(with_stats(vec![t2.into(), p.into(), l.into()], &s));
            pts.push(FitPoint::from_stats(l, &s));
        }
        groups.push((t2, pts));
    }
    Ok((t, groups))
}

fn negativity_scaling(scale: f64, seed: u64) -> Result<Out> {
    let run = run_cfg(scaled(50, scale), seed);
    let ls = [8usize, 16, 24, 32];
    let t2s = [1.5, 5.0];
    let ps = [0.25, 0.75];
    let mut data: Option<Table> = None;
    let mut fits = Table::new(FIT_COLUMNS);
    let range = FitRange::new(ls[0], ls[ls.len() - 1])?;
    for &p in &ps {
        let (t, groups) = half_system_sweep(|len| Observable::Negativity { len }, &ls, &t2s, p, &run)?;
        match data.as_mut() {
            Some(d) => d.rows.extend(t.rows),
            None => data = Some(t),
        }
        for (t2, pts) in &groups {
            let f = fit_negativity_scaling(pts, range)?;
            fits.push(fit_row(format!("t2={t2};p={p}").into(), &f));
        }
    }
    Ok((
        vec![
            Artifact::new("negativity_scaling", "half-system negativity against L", data.expect("nonempty p list")),
            Artifact::new(
                "negativity_scaling_fit",
                "negativity-ansatz fits weighted by the inverse squared CI width",
                fits,
            ),
        ],
        json!({ "L": ls, "t2": t2s, "p": ps, "t12": FRAC_PI_2, "run": run }),
    ))
}

/// Entropy-ansatz fits of `S_{L/2}` for every range and the crossover `t2`.
pub fn fit_range_tables(groups: &[(f64, Vec<FitPoint>)], ranges: &[(usize, usize)]) -> Result<(Table, Table)> {
    let mut fits = Table::new(FIT_COLUMNS);
    let mut onset = Table::new(["l_min", "l_max", "t2_lin"]);
    for &(lo, hi) in ranges {
        let range = FitRange::new(lo, hi)?;
        let mut per_t2 = Vec::new();
        for (t2, pts) in groups {
            let f = fit_scaling(pts, range, FitModel::EntropyAnsatz)?;
            fits.push(fit_row((*t2).into(), &f));
            per_t2.push((*t2, f));
        }
        onset.push(vec![lo.into(), hi.into(), linear_onset(&per_t2).into()]);
    }
    Ok((fits, onset))
}

fn fit_ranges(scale: f64, seed: u64) -> Result<Out> {
    let run = run_cfg(scaled(20, scale), seed);
    let ls = [8usize, 16, 24, 32, 40, 48, 56, 64];
    let t2s = [1.0, 2.0, 2.5, 3.0, 3.25, 3.5, 3.75, 4.0, 4.5, 5.0, 7.0, 10.0];
    let ranges = [(8, 40), (16, 56), (24, 64)];
    let (data, groups) = half_system_sweep(|len| Observable::Entropy { len }, &ls, &t2s, 1.0, &run)?;
    let (fits, onset) = fit_range_tables(&groups, &ranges)?;
    Ok((
        vec![
            Artifact::new("fit_ranges_data", "half-system entropy against L", data),
            Artifact::new("fit_ranges", "entropy-ansatz fits with linear and log contributions at L_max", fits),
            Artifact::new("fit_ranges_onset", "t2 beyond which the linear contribution stays above the log one", onset),
        ],
        json!({ "L": ls, "t2": t2s, "t12": FRAC_PI_2, "p": 1.0, "ranges": ranges, "run": run }),
    ))
}

fn residuals(scale: f64, seed: u64) -> Result<Out> {
    let run = run_cfg(scaled(50, scale), seed);
    let ls = [8usize, 16, 24, 32, 40];
    let t2s = [1.5, 5.0];
    let (data, groups) = half_system_sweep(|len| Observable::Negativity { len }, &ls, &t2s, 0.5, &run)?;
    let range = FitRange::new(ls[0], ls[ls.len() - 1])?;
    let mut res = Table::new(["t2", "model", "L", "residual"]);
    let mut summary = Table::new(["t2", "model", "rss", "total_residual", "preferred"]);
    for (t2, pts) in &groups {
        let r = residual_comparison(pts, range)?;
        for (fit, total, rs) in
            [(&r.linear, r.total_linear, &r.residuals_linear), (&r.log, r.total_log, &r.residuals_log)]
        {
            let name = model_name(fit.model);
            for (l, v) in rs {
                res.push(vec![(*t2).into(), name.clone().into(), (*l).into(), (*v).into()]);
            }
            summary.push(vec![
                (*t2).into(),
                name.into(),
                fit.rss.into(),
                total.into(),
                usize::from(r.preferred == fit.model).into(),
            ]);
        }
    }
    Ok((
        vec![
            Artifact::new("residuals_data", "half-system negativity against L", data),
            Artifact::new("residuals", "signed residuals of linear-only and log-only fits", res),
            Artifact::new("residuals_summary", "residual sums of squares and totals per model", summary),
        ],
        json!({ "L": ls, "t2": t2s, "t12": FRAC_PI_2, "p": 0.5, "run": run }),
    ))
}
