//! Stroboscopic trajectories, time and ensemble averages, phase-diagram scans.
//!
//! A trajectory starts from a random half-filled product state, runs `t_st`
//! cycles of unitary evolution plus an outer-chain measurement round, and then
//! records every requested observable after each of `m` further cycles.
//! Trajectory `alpha` draws from stream `alpha` of a ChaCha8 generator seeded
//! with `base_seed`, so any trajectory can be recomputed in isolation.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entanglement::{
    fermionic_negativity, mutual_information, renyi_half_entropy, segment, segment_entropy, Partition,
};
use crate::gaussian::{init_neel, init_random_halffilling, CorrelationMatrix, MeasurementRecord};
use crate::lattice::{ladder_propagator, LadderParams, Propagator};
use crate::parallel::try_map_indexed;
use crate::{Error, Result};

/// Bootstrap resamples behind every confidence interval.
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
const BOOTSTRAP_SEED: u64 = 0x0b00_75ae;
/// `Q_{L/2}` below this leaves `delta = 1 - Q_{L/4} / Q_{L/2}` undefined.
pub const DELTA_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    RandomHalfFilling,
    Neel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub t_st: usize,
    pub m: usize,
    pub n_traj: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub init: InitKind,
}

impl RunConfig {
    /// Defaults for a ladder of `l` rungs: 100 / 1000 steady-state steps and
    /// 400 / 1000 trajectories below / above `L = 64`, 1000 trajectories close
    /// to the area-law region `t2 <= 1.5`.
    pub fn defaults_for(l: usize, t2: f64) -> Self {
        let large = l > 64;
        let n_traj = if large || t2.abs() <= 1.5 { 1000 } else { 400 };
        RunConfig {
            t_st: if large { 1000 } else { 100 },
            m: 5,
            n_traj,
            base_seed: 0,
            init: InitKind::RandomHalfFilling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_st == 0 || self.m == 0 || self.n_traj == 0 {
            return Err(Error::param("t_st, m and n_traj must all be positive"));
        }
        Ok(())
    }
}

/// Quantities evaluated on the inner chain of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// Von Neumann entropy of the arc `[0, len)`.
    Entropy { len: usize },
    /// Renyi-1/2 entropy of the arc `[0, len)`.
    Renyi { len: usize },
    /// Mutual information of two arcs of length `len` at distance `L/2`.
    MutualInformation { len: usize },
    /// Mutual information of an explicit partition.
    MutualInformationOf { a1: Vec<usize>, a2: Vec<usize> },
    /// Fermionic negativity between the arc `[0, len)` and the rest of the inner chain.
    Negativity { len: usize },
    /// Total particle number of the ladder.
    ParticleNumber,
}

impl Observable {
    pub fn evaluate(&self, d: &CorrelationMatrix) -> Result<f64> {
        let l = d.rungs();
        let check_len = |len: usize| {
            if len == 0 || len > l {
                Err(Error::param(format!("segment length {len} outside 1..={l}")))
            } else {
                Ok(())
            }
        };
        match self {
            Observable::ParticleNumber => Ok(d.particle_number()),
            _ => {
                let inner = d.inner_block();
                let v = inner.view();
                match self {
                    Observable::Entropy { len } => {
                        check_len(*len)?;
                        segment_entropy(&v, &segment(l, 0, *len))
                    }
                    Observable::Renyi { len } => {
                        check_len(*len)?;
                        let sites = segment(l, 0, *len);
                        let sub = crate::gaussian::reduce(&v, &sites)?;
                        renyi_half_entropy(&sub.view())
                    }
                    Observable::MutualInformation { len } => mutual_information(&v, &Partition::opposing(l, *len)?),
                    Observable::MutualInformationOf { a1, a2 } => {
                        mutual_information(&v, &Partition::new(l, a1.clone(), a2.clone())?)
                    }
                    Observable::Negativity { len } => {
                        check_len(*len)?;
                        fermionic_negativity(&v, &segment(l, 0, *len))
                    }
                    Observable::ParticleNumber => unreachable!(),
                }
            }
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Entropy { len } => write!(f, "entropy_{len}"),
            Observable::Renyi { len } => write!(f, "renyi_{len}"),
            Observable::MutualInformation { len } => write!(f, "mutual_information_{len}"),
            Observable::MutualInformationOf { a1, a2 } => write!(f, "mutual_information_{a1:?}_{a2:?}"),
            Observable::Negativity { len } => write!(f, "negativity_{len}"),
            Observable::ParticleNumber => write!(f, "particle_number"),
        }
    }
}

/// Generator of trajectory `traj_index`.
pub fn trajectory_rng(base_seed: u64, traj_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(traj_index);
    rng
}

/// One stroboscopic cycle: evolution, a measurement round, and a purity check.
pub fn cycle<R: Rng + ?Sized>(
    d: &mut CorrelationMatrix,
    u: &Propagator,
    p: f64,
    rng: &mut R,
    step: usize,
) -> Result<Vec<MeasurementRecord>> {
    d.evolve(u)?;
    let records = d.measure_outer_chain(p, rng, step)?;
    d.check_purity()?;
    Ok(records)
}

fn initial_state<R: Rng + ?Sized>(l: usize, init: InitKind, rng: &mut R) -> Result<CorrelationMatrix> {
    match init {
        InitKind::RandomHalfFilling => init_random_halffilling(l, rng),
        InitKind::Neel => init_neel(l),
    }
}

/// Observable values after each of the `m` post-steady cycles,
/// `samples[observable][s]`.
pub fn run_trajectory_samples(
    params: &LadderParams,
    cfg: &RunConfig,
    observables: &[Observable],
    traj_index: usize,
) -> Result<Vec<Vec<f64>>> {
    let u = ladder_propagator(params)?;
    run_with_propagator(params, &u, cfg, observables, traj_index)
}

fn run_with_propagator(
    params: &LadderParams,
    u: &Propagator,
    cfg: &RunConfig,
    observables: &[Observable],
    traj_index: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = trajectory_rng(cfg.base_seed, traj_index as u64);
    let mut d = initial_state(params.l, cfg.init, &mut rng)?;
    for step in 1..=cfg.t_st {
        cycle(&mut d, u, params.p, &mut rng, step)?;
    }
    let mut samples = vec![Vec::with_capacity(cfg.m); observables.len()];
    for s in 1..=cfg.m {
        cycle(&mut d, u, params.p, &mut rng, cfg.t_st + s)?;
        for (obs, out) in observables.iter().zip(samples.iter_mut()) {
            out.push(obs.evaluate(&d)?);
        }
    }
    Ok(samples)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Time averages over the `m` post-steady cycles, one per observable.
pub fn run_trajectory(
    params: &LadderParams,
    cfg: &RunConfig,
    observables: &[Observable],
    traj_index: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    cfg.validate()?;
    Ok(run_trajectory_samples(params, cfg, observables, traj_index)?.iter().map(|s| mean(s)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub mean: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: usize,
}

impl TrajectoryStats {
    pub fn ci_width(&self) -> f64 {
        self.ci95_high - self.ci95_low
    }

    pub fn overlaps(&self, other: &TrajectoryStats) -> bool {
        self.ci95_low <= other.ci95_high && other.ci95_low <= self.ci95_high
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap of a statistic of resampled index sets.
fn bootstrap_interval<F: Fn(&[usize]) -> f64>(n: usize, stat: F) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let all: Vec<usize> = (0..n).collect();
    let mut idx = vec![0usize; n];
    let mut draws: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = *all.choose(&mut rng).expect("n >= 1");
            }
            stat(&idx)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    (percentile(&draws, 0.025), percentile(&draws, 0.975))
}

/// Mean over trajectories with a 95% percentile-bootstrap interval.
pub fn ensemble_average(values: &[f64]) -> Result<TrajectoryStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::param(format!("ensemble average needs at least 2 values, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite trajectory value"));
    }
    let m = mean(values);
    let (lo, hi) = bootstrap_interval(n, |idx| idx.iter().map(|&i| values[i]).sum::<f64>() / n as f64);
    Ok(TrajectoryStats { mean: m, ci95_low: lo.min(m), ci95_high: hi.max(m), n })
}

/// Stats of the prefixes `values[..n]` for every checkpoint `n`.
pub fn prefix_profile(values: &[f64], checkpoints: &[usize]) -> Result<Vec<TrajectoryStats>> {
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("checkpoints must be ascending"));
    }
    checkpoints
        .iter()
        .map(|&n| {
            if n > values.len() {
                return Err(Error::param(format!("checkpoint {n} exceeds {} samples", values.len())));
            }
            ensemble_average(&values[..n])
        })
        .collect()
}

/// Runs `max(checkpoints)` trajectories once and reports prefix averages.
pub fn convergence_profile(
    params: &LadderParams,
    cfg: &RunConfig,
    observable: &Observable,
    checkpoints: &[usize],
) -> Result<Vec<TrajectoryStats>> {
    let n = checkpoints.iter().copied().max().unwrap_or(0);
    let cfg = RunConfig { n_traj: n.max(1), ..cfg.clone() };
    let values = run_ensemble(params, &cfg, std::slice::from_ref(observable), None)?;
    prefix_profile(&values[0], checkpoints)
}

/// Per-trajectory time averages, `values[observable][trajectory]`.
///
/// With a checkpoint directory, each trajectory's samples are stored in
/// its own file and reused when present.
pub fn run_ensemble(
    params: &LadderParams,
    cfg: &RunConfig,
    observables: &[Observable],
    checkpoint: Option<&Checkpoint>,
) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    cfg.validate()?;
    let u = ladder_propagator(params)?;
    let per_traj =
        try_map_indexed(cfg.n_traj, |alpha| trajectory_means(params, &u, cfg, observables, alpha, checkpoint))?;
    Ok(transpose(per_traj, observables.len()))
}

fn transpose(per_traj: Vec<Vec<f64>>, n_obs: usize) -> Vec<Vec<f64>> {
    (0..n_obs).map(|k| per_traj.iter().map(|t| t[k]).collect()).collect()
}

fn trajectory_means(
    params: &LadderParams,
    u: &Propagator,
    cfg: &RunConfig,
    observables: &[Observable],
    alpha: usize,
    checkpoint: Option<&Checkpoint>,
) -> Result<Vec<f64>> {
    let samples = match checkpoint {
        Some(ck) => match ck.load(alpha, observables, cfg.m)? {
            Some(s) => s,
            None => {
                let s = run_with_propagator(params, u, cfg, observables, alpha)?;
                ck.store(alpha, observables, &s)?;
                s
            }
        },
        None => run_with_propagator(params, u, cfg, observables, alpha)?,
    };
    Ok(samples.iter().map(|s| mean(s)).collect())
}

/// Directory of per-trajectory sample files for one grid point.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    dir: PathBuf,
    key: String,
}

impl Checkpoint {
    pub fn new(dir: impl Into<PathBuf>, key: impl Into<String>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Checkpoint { dir, key: key.into() })
    }

    pub fn with_key(&self, key: impl Into<String>) -> Self {
        Checkpoint { dir: self.dir.clone(), key: key.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, alpha: usize) -> PathBuf {
        self.dir.join(format!("{}_traj{alpha:06}.txt", self.key))
    }

    fn header(observables: &[Observable]) -> String {
        let names: Vec<String> = observables.iter().map(ToString::to_string).collect();
        format!("# {}", names.join(" "))
    }

    /// Samples of trajectory `alpha`, if a matching file exists.
    pub fn load(&self, alpha: usize, observables: &[Observable], m: usize) -> Result<Option<Vec<Vec<f64>>>> {
        let path = self.path(alpha);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut lines = text.lines();
        if lines.next() != Some(Self::header(observables).as_str()) {
            return Err(Error::param(format!("checkpoint {} was written for other observables", path.display())));
        }
        let bad = || Error::param(format!("malformed checkpoint {}", path.display()));
        let rows: Vec<Vec<f64>> = lines
            .map(|line| line.split_whitespace().map(|x| x.parse::<f64>().map_err(|_| bad())).collect())
            .collect::<Result<_>>()?;
        if rows.len() != observables.len() || rows.iter().any(|r| r.len() != m) {
            return Err(bad());
        }
        Ok(Some(rows))
    }

    pub fn store(&self, alpha: usize, observables: &[Observable], samples: &[Vec<f64>]) -> Result<()> {
        let path = self.path(alpha);
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        writeln!(f, "{}", Self::header(observables))?;
        for row in samples {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        f.sync_all()?;
        drop(f);
        fs::rename(tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanQuantity {
    DeltaS,
    DeltaE,
}

impl ScanQuantity {
    fn observables(self, l: usize) -> [Observable; 2] {
        match self {
            ScanQuantity::DeltaS => [Observable::Entropy { len: l / 4 }, Observable::Entropy { len: l / 2 }],
            ScanQuantity::DeltaE => [Observable::Negativity { len: l / 4 }, Observable::Negativity { len: l / 2 }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub t12: Vec<f64>,
    pub t2: Vec<f64>,
}

impl ScanGrid {
    /// `n` evenly spaced values on `[lo, hi]`, endpoints included.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    /// Grid points in row-major order, `t12` slowest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.t12.iter().flat_map(|&a| self.t2.iter().map(move |&b| (a, b))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub t12: f64,
    pub t2: f64,
    pub quarter: TrajectoryStats,
    pub half: TrajectoryStats,
    /// `1 - Q_{L/4} / Q_{L/2}`, `None` when `Q_{L/2}` vanishes.
    pub delta: Option<f64>,
    pub delta_ci95: Option<(f64, f64)>,
}

fn delta_of(q: f64, h: f64) -> Option<f64> {
    (h.abs() >= DELTA_FLOOR).then(|| 1.0 - q / h)
}

/// `delta = 1 - Q_{L/4} / Q_{L/2}` at every grid point.
///
/// All grid points share the trajectory seeds of `cfg`, so neighbouring
/// points differ only through the parameters.
pub fn scan_phase_diagram(
    grid: &ScanGrid,
    template: &LadderParams,
    cfg: &RunConfig,
    quantity: ScanQuantity,
    checkpoint: Option<&Checkpoint>,
) -> Result<Vec<ScanRow>> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::param("empty scan grid"));
    }
    if quantity == ScanQuantity::DeltaS && template.p != 1.0 {
        return Err(Error::param("delta_S requires p = 1 (pure inner chain)"));
    }
    if cfg.n_traj < 2 {
        return Err(Error::param("a scan needs at least 2 trajectories per point"));
    }
    if template.l < 4 {
        return Err(Error::param("a scan needs L >= 4"));
    }
    cfg.validate()?;
    let observables = quantity.observables(template.l);
    let params: Vec<LadderParams> = points
        .iter()
        .map(|&(t12, t2)| {
            let p = LadderParams { t12, t2, ..*template };
            p.validate().map(|_| p)
        })
        .collect::<Result<_>>()?;
    let props: Vec<Propagator> = params.iter().map(ladder_propagator).collect::<Result<_>>()?;
    let checkpoints: Vec<Option<Checkpoint>> =
        (0..points.len()).map(|g| checkpoint.map(|c| c.with_key(format!("g{g:04}")))).collect();
    let n = cfg.n_traj;
    let flat = try_map_indexed(points.len() * n, |k| {
        let (g, alpha) = (k / n, k % n);
        trajectory_means(&params[g], &props[g], cfg, &observables, alpha, checkpoints[g].as_ref())
    })?;
    flat.chunks(n)
        .zip(points)
        .map(|(chunk, (t12, t2))| {
            let cols = transpose(chunk.to_vec(), 2);
            let quarter = ensemble_average(&cols[0])?;
            let half = ensemble_average(&cols[1])?;
            let delta = delta_of(quarter.mean, half.mean);
            let delta_ci95 = delta.map(|_| {
                let (lo, hi) = bootstrap_interval(n, |idx| {
                    let q = idx.iter().map(|&i| cols[0][i]).sum::<f64>();
                    let h = idx.iter().map(|&i| cols[1][i]).sum::<f64>();
                    if h.abs() < DELTA_FLOOR * n as f64 {
                        0.0
                    } else {
                        1.0 - q / h
                    }
                });
                (lo, hi)
            });
            Ok(ScanRow { t12, t2, quarter, half, delta, delta_ci95 })
        })
        .collect()
}
