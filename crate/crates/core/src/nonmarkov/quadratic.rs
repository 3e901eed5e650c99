//! Quadratic (L2) trace distance between trajectory-averaged states computed
//! from Gaussian trajectories, and the corresponding non-Markovianity measure.
//!
//! For particle-conserving Gaussian states with correlation matrices `c1`,
//! `c2`: `Tr(rho1 rho2) = det[c1 c2 + (1 - c1)(1 - c2)]`. The formula is
//! checked against explicit density matrices once per process before the
//! first use.

use std::sync::OnceLock;

use ndarray::s;
use rand::Rng;
use serde::Serialize;

use crate::engine::{cycle, trajectory_rng};
use crate::gaussian::CorrelationMatrix;
use crate::lattice::{chain_modes, ladder_propagator, Chain, LadderParams};
use crate::parallel::{map_indexed, try_map_indexed};
use crate::{CMatrix, Error, Result, C64};

use super::blp::{pair_rng, positive_increment_sum};
use super::channel::reduce_to_inner;
use super::fock::{density_correlation, slater_state, FockBasis};
use super::sampling::{haar_unitary, sample_initial_pair, PairMode};

/// Radicands in `[-RADICAND_CLAMP, 0)` are treated as roundoff.
pub const RADICAND_CLAMP: f64 = 1e-10;
const SELF_TEST_TOL: f64 = 1e-8;

/// Determinant by LU with partial pivoting (small matrices, hot loop).
pub fn det_small(m: &CMatrix) -> C64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = C64::new(1.0, 0.0);
    for k in 0..n {
        let mut piv = k;
        let mut best = a[[k, k]].norm();
        for r in (k + 1)..n {
            let v = a[[r, k]].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != k {
            for c in k..n {
                a.swap([k, c], [piv, c]);
            }
            det = -det;
        }
        let p = a[[k, k]];
        det *= p;
        for r in (k + 1)..n {
            let f = a[[r, k]] / p;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for c in (k + 1)..n {
                let sub = f * a[[k, c]];
                a[[r, c]] -= sub;
            }
        }
    }
    det
}

fn product_trace_raw(c1: &CMatrix, c2: &CMatrix) -> C64 {
    let n = c1.nrows();
    let mut m = c1.dot(c2).mapv(|z| z * 2.0) - c1 - c2;
    for j in 0..n {
        m[[j, j]] += 1.0;
    }
    det_small(&m)
}

/// `Tr(rho1 rho2)` of two Gaussian states given by their correlation matrices.
pub fn gaussian_product_trace(c1: &CMatrix, c2: &CMatrix) -> Result<f64> {
    ensure_product_trace_validated()?;
    product_trace_checked(c1, c2)
}

fn product_trace_checked(c1: &CMatrix, c2: &CMatrix) -> Result<f64> {
    if c1.dim() != c2.dim() || c1.nrows() != c1.ncols() {
        return Err(Error::param(format!("product trace of {:?} and {:?}", c1.dim(), c2.dim())));
    }
    let z = product_trace_raw(c1, c2);
    if z.im.abs() > 1e-9 * z.norm().max(1.0) {
        return Err(Error::numeric(format!("product trace has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

/// One random case of the determinant formula against explicit matrices:
/// two Haar Slater states of an `l`-rung ladder are reduced to the inner
/// chain by a fermionic partial trace. Returns `(explicit, formula)`.
pub fn product_trace_oracle_case<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Result<(f64, f64)> {
    let m = 2 * l;
    let basis = FockBasis::full(m)?;
    let mut reduced = Vec::new();
    let mut corr = Vec::new();
    for _ in 0..2 {
        let n = rng.random_range(1..m);
        let phi = haar_unitary(m, rng)?.slice(s![.., ..n]).to_owned();
        let psi = slater_state(&basis, &phi)?;
        let v = ndarray::Array1::from(psi);
        let rho = ndarray::Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj());
        let red = reduce_to_inner(&basis, &rho)?;
        let inner_basis = FockBasis::full(l)?;
        let c = density_correlation(&inner_basis, &red);
        // the explicit reduction must agree with the Gaussian one
        let d = phi.mapv(|z| z.conj()).dot(&phi.t());
        let dg = crate::gaussian::reduce(&d.view(), &chain_modes(l, Chain::Inner))?;
        let gap = crate::linalg::max_abs_diff(&c.view(), &dg.view());
        if gap > SELF_TEST_TOL {
            return Err(Error::Oracle(format!("partial trace disagrees with Gaussian reduction by {gap:.3e}")));
        }
        reduced.push(red);
        corr.push(c);
    }
    let explicit = crate::linalg::trace(&reduced[0].dot(&reduced[1]).view()).re;
    let formula = product_trace_checked(&corr[0], &corr[1])?;
    Ok((explicit, formula))
}

static SELF_TEST: OnceLock<std::result::Result<(), String>> = OnceLock::new();

/// Runs the explicit-matrix check of the product-trace formula once.
pub fn ensure_product_trace_validated() -> Result<()> {
    let outcome = SELF_TEST.get_or_init(|| {
        let mut rng = pair_rng(0x5e1f_7e57, 0);
        for l in [1usize, 2, 3] {
            for _ in 0..4 {
                match product_trace_oracle_case(l, &mut rng) {
                    Ok((a, b)) if (a - b).abs() <= SELF_TEST_TOL => {}
                    Ok((a, b)) => return Err(format!("product trace formula {b:.12} vs explicit {a:.12} at L = {l}")),
                    Err(e) => return Err(e.to_string()),
                }
            }
        }
        Ok(())
    });
    outcome.clone().map_err(Error::Oracle)
}

/// Inner-chain correlation matrices of `N_traj` trajectories at every
/// stroboscopic time `0..=t_max`, for one initial condition.
#[derive(Debug, Clone)]
pub struct GaussianEnsemble {
    /// `trajectories[alpha][t]`.
    pub trajectories: Vec<Vec<CMatrix>>,
}

impl GaussianEnsemble {
    /// Runs `n_traj` trajectories from `initial`; trajectory `alpha` uses RNG
    /// stream `alpha` of `seed`.
    pub fn simulate(
        params: &LadderParams,
        initial: &CorrelationMatrix,
        n_traj: usize,
        t_max: usize,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        if n_traj == 0 {
            return Err(Error::param("n_traj must be positive"));
        }
        let u = ladder_propagator(params)?;
        let trajectories = try_map_indexed(n_traj, |alpha| {
            let mut rng = trajectory_rng(seed, alpha as u64);
            let mut d = initial.clone();
            let mut out = Vec::with_capacity(t_max + 1);
            out.push(d.inner_block());
            for t in 1..=t_max {
                cycle(&mut d, &u, params.p, &mut rng, t)?;
                out.push(d.inner_block());
            }
            Ok::<_, Error>(out)
        })?;
        Ok(GaussianEnsemble { trajectories })
    }

    pub fn n_traj(&self) -> usize {
        self.trajectories.len()
    }

    pub fn n_times(&self) -> usize {
        self.trajectories.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceSeries {
    pub times: Vec<usize>,
    pub values: Vec<f64>,
}

fn mean_product_trace(a: &[&CMatrix], b: &[&CMatrix], symmetric: bool) -> Result<f64> {
    let mut total = 0.0;
    for (i, ca) in a.iter().enumerate() {
        if symmetric {
            total += product_trace_checked(ca, ca)?;
            for cb in &b[i + 1..] {
                total += 2.0 * product_trace_checked(ca, cb)?;
            }
        } else {
            for cb in b {
                total += product_trace_checked(ca, cb)?;
            }
        }
    }
    Ok(total / (a.len() * b.len()) as f64)
}

/// `d2(t) = sqrt(T11 + T22 - 2 T12)` between the ensemble-averaged states.
pub fn quadratic_distance_series(ens_a: &GaussianEnsemble, ens_b: &GaussianEnsemble) -> Result<DistanceSeries> {
    ensure_product_trace_validated()?;
    let nt = ens_a.n_times();
    if nt != ens_b.n_times() || ens_a.n_traj() == 0 || ens_b.n_traj() == 0 {
        return Err(Error::param("ensembles must be nonempty and share the time grid"));
    }
    let values = map_indexed(nt, |t| -> Result<f64> {
        let a: Vec<&CMatrix> = ens_a.trajectories.iter().map(|tr| &tr[t]).collect();
        let b: Vec<&CMatrix> = ens_b.trajectories.iter().map(|tr| &tr[t]).collect();
        let t11 = mean_product_trace(&a, &a, true)?;
        let t22 = mean_product_trace(&b, &b, true)?;
        let t12 = mean_product_trace(&a, &b, false)?;
        let r = t11 + t22 - 2.0 * t12;
        if r < -RADICAND_CLAMP {
            return Err(Error::numeric(format!("quadratic distance radicand {r:.3e} at t = {t}")));
        }
        Ok(r.max(0.0).sqrt())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(DistanceSeries { times: (0..nt).collect(), values })
}

/// `max over pairs of the summed positive increments of d2`.
pub fn n_measure_quadratic(series: &[Vec<f64>]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::param("at least one pair series is required"));
    }
    Ok(series.iter().map(|s| positive_increment_sum(s)).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadraticResult {
    pub n: f64,
    pub best_pair: usize,
    pub series: Vec<Vec<f64>>,
}

/// Samples `n_pairs` pure initial pairs and evaluates `d2(t)` for each. The
/// two ensembles of a pair share their trajectory RNG streams.
pub fn quadratic_measure(
    params: &LadderParams,
    n_pairs: usize,
    n_traj: usize,
    t_max: usize,
    mode: PairMode,
    seed: u64,
) -> Result<QuadraticResult> {
    if mode == PairMode::RandomMixed {
        return Err(Error::param("the Gaussian pipeline needs pure initial pairs"));
    }
    if n_pairs == 0 {
        return Err(Error::param("n_pairs must be positive"));
    }
    ensure_product_trace_validated()?;
    let mut series = Vec::with_capacity(n_pairs);
    for k in 0..n_pairs {
        let pair = sample_initial_pair(&mut pair_rng(seed, k), params.l, mode)?;
        let traj_seed = seed.wrapping_add(1 + k as u64);
        let a = GaussianEnsemble::simulate(params, &pair.first.correlation()?, n_traj, t_max, traj_seed)?;
        let b = GaussianEnsemble::simulate(params, &pair.second.correlation()?, n_traj, t_max, traj_seed)?;
        series.push(quadratic_distance_series(&a, &b)?.values);
    }
    let (best_pair, n) = series
        .iter()
        .map(|s| positive_increment_sum(s))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(QuadraticResult { n, best_pair, series })
}
