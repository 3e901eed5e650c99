//! Trace-distance (BLP) non-Markovianity of the inner chain from the exact
//! averaged channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lattice::LadderParams;
use crate::parallel::try_map_indexed;
use crate::{Error, Result};

use super::channel::{half_trace_norm, reduce_to_inner, AveragedChannel};
use super::fock::FockBasis;
use super::sampling::{sample_initial_pair, InitialPair, PairMode};

/// Distance series of one initial pair, `t = 0..=t_max`.
#[derive(Debug, Clone, Serialize)]
pub struct PairSeries {
    pub pair_id: usize,
    /// Trace distance of the reduced inner-chain states.
    pub reduced: Vec<f64>,
    /// Trace distance of the full ladder states.
    pub full: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlpResult {
    pub n_phi: f64,
    pub best_pair: usize,
    pub n_norm: f64,
    pub best_norm_pair: usize,
    pub series: Vec<PairSeries>,
}

/// Total variation below which a distance series counts as constant.
pub const NOISE_FLOOR: f64 = 1e-9;

/// Sum of the positive one-step increments of `series`.
pub fn positive_increment_sum(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// Sum of the absolute one-step increments.
pub fn total_variation(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Positive part over total variation; series whose total variation is
/// below [`NOISE_FLOOR`] give 0.
pub fn normalized_ratio(series: &[f64]) -> f64 {
    let tv = total_variation(series);
    if tv > NOISE_FLOOR {
        positive_increment_sum(series) / tv
    } else {
        0.0
    }
}

/// RNG for initial pair `pair` of a run seeded with `seed`.
pub fn pair_rng(seed: u64, pair: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair as u64);
    rng
}

/// Evolves the difference of one initial pair through `t_max` averaged cycles.
pub fn pair_distance_series(
    channel: &AveragedChannel,
    pair: &InitialPair,
    t_max: usize,
    pair_id: usize,
) -> Result<PairSeries> {
    let basis = channel.basis();
    let a = pair.first.density_matrix(basis)?;
    let b = pair.second.density_matrix(basis)?;
    let mut delta = &a.rho - &b.rho;
    let mut reduced = Vec::with_capacity(t_max + 1);
    let mut full = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            delta = channel.apply(&delta);
        }
        reduced.push(half_trace_norm(&reduce_to_inner(basis, &delta)?)?);
        full.push(half_trace_norm(&delta)?);
    }
    Ok(PairSeries { pair_id, reduced, full })
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values.enumerate().fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// `N = max over pairs of the summed positive increments` of the reduced
/// trace distance, together with the normalized variant.
pub fn blp_measure(
    params: &LadderParams,
    n_pairs: usize,
    t_max: usize,
    mode: PairMode,
    seed: u64,
) -> Result<BlpResult> {
    if n_pairs == 0 {
        return Err(Error::param("n_pairs must be positive"));
    }
    let basis = FockBasis::sector(params.n_modes(), params.l)?;
    let channel = AveragedChannel::new(params, basis)?;
    let series = try_map_indexed(n_pairs, |k| {
        let pair = sample_initial_pair(&mut pair_rng(seed, k), params.l, mode)?;
        pair_distance_series(&channel, &pair, t_max, k)
    })?;
    let (best_pair, n_phi) = argmax(series.iter().map(|s| positive_increment_sum(&s.reduced)));
    let (best_norm_pair, n_norm) = argmax(series.iter().map(|s| normalized_ratio(&s.reduced)));
    Ok(BlpResult { n_phi, best_pair, n_norm, best_norm_pair, series })
}

/// Normalized measure only.
pub fn normalized_blp_measure(
    params: &LadderParams,
    n_pairs: usize,
    t_max: usize,
    mode: PairMode,
    seed: u64,
) -> Result<f64> {
    Ok(blp_measure(params, n_pairs, t_max, mode, seed)?.n_norm)
}
