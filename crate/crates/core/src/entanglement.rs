//! Entanglement diagnostics of Gaussian states from (reduced) correlation
//! matrices: von Neumann and Renyi-1/2 entropies, mutual information and the
//! fermionic logarithmic negativity. All logarithms are natural.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::gaussian::reduce;
use crate::linalg::{dagger, eigh, eigvalsh};
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalues inside `[-CLIP_TOL, 1 + CLIP_TOL]` are clipped silently.
pub const CLIP_TOL: f64 = 1e-9;
/// Eigenvalues beyond `[-HARD_TOL, 1 + HARD_TOL]` indicate a corrupted state.
pub const HARD_TOL: f64 = 1e-6;
/// Eigenvalues of `G*` this close to 0 or 1 are rounded onto the endpoint
/// before the square roots.
pub const NEGATIVITY_SNAP: f64 = 1e-14;
/// Largest accepted condition number of `1 + G+ G-` in the negativity.
pub const NEGATIVITY_MAX_COND: f64 = 1e12;

/// Spectrum of a reduced correlation matrix clipped to `[0, 1]`.
pub fn occupation_spectrum(dr: &ArrayView2<C64>) -> Result<Vec<f64>> {
    eigvalsh(dr)?.iter().map(|&x| clip_unit(x, "correlation eigenvalue")).collect()
}

fn clip_unit(x: f64, what: &str) -> Result<f64> {
    if !(-HARD_TOL..=1.0 + HARD_TOL).contains(&x) || !x.is_finite() {
        return Err(Error::numeric(format!("{what} {x:.3e} outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

fn binary_entropy(x: f64) -> f64 {
    let mut s = 0.0;
    if x > 0.0 {
        s -= x * x.ln();
    }
    if x < 1.0 {
        s -= (1.0 - x) * (1.0 - x).ln();
    }
    s
}

/// `S = -sum [l ln l + (1 - l) ln(1 - l)]` over the eigenvalues of `dr`.
pub fn von_neumann_entropy(dr: &ArrayView2<C64>) -> Result<f64> {
    Ok(occupation_spectrum(dr)?.into_iter().map(binary_entropy).sum())
}

/// Renyi entropy of order 1/2, `2 sum ln(sqrt(l) + sqrt(1 - l))`.
pub fn renyi_half_entropy(dr: &ArrayView2<C64>) -> Result<f64> {
    Ok(occupation_spectrum(dr)?.into_iter().map(|x| 2.0 * (x.sqrt() + (1.0 - x).sqrt()).ln()).sum())
}

/// Two disjoint groups of inner-chain sites on a ring of `l` sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub a1: Vec<usize>,
    pub a2: Vec<usize>,
    pub l: usize,
}

impl Partition {
    pub fn new(l: usize, mut a1: Vec<usize>, mut a2: Vec<usize>) -> Result<Self> {
        a1.sort_unstable();
        a2.sort_unstable();
        a1.dedup();
        a2.dedup();
        if a1.iter().chain(&a2).any(|&s| s >= l) {
            return Err(Error::param(format!("partition site out of range for L = {l}")));
        }
        if a1.iter().any(|s| a2.binary_search(s).is_ok()) {
            return Err(Error::param("partition segments overlap"));
        }
        Ok(Partition { a1, a2, l })
    }

    /// Contiguous arcs `[start1, start1 + len1)` and `[start2, start2 + len2)` (mod `l`).
    pub fn arcs(l: usize, start1: usize, len1: usize, start2: usize, len2: usize) -> Result<Self> {
        Self::new(l, segment(l, start1, len1), segment(l, start2, len2))
    }

    /// Two segments of length `len` centred on diametrically opposite points.
    pub fn opposing(l: usize, len: usize) -> Result<Self> {
        Self::arcs(l, 0, len, l / 2, len)
    }

    pub fn union(&self) -> Vec<usize> {
        let mut u: Vec<usize> = self.a1.iter().chain(&self.a2).copied().collect();
        u.sort_unstable();
        u
    }
}

/// Sites `start, start + 1, ..., start + len - 1` wrapped onto the ring.
pub fn segment(l: usize, start: usize, len: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..len.min(l)).map(|k| (start + k) % l).collect();
    v.sort_unstable();
    v
}

/// Entropy of the sites `sites` of a system correlation matrix.
pub fn segment_entropy(d_sys: &ArrayView2<C64>, sites: &[usize]) -> Result<f64> {
    if sites.is_empty() {
        return Ok(0.0);
    }
    von_neumann_entropy(&reduce(d_sys, sites)?.view())
}

/// `I(A1 : A2) = S(A1) + S(A2) - S(A1 u A2)`.
pub fn mutual_information(d_sys: &ArrayView2<C64>, part: &Partition) -> Result<f64> {
    if part.a1.is_empty() || part.a2.is_empty() {
        return Err(Error::param("mutual information needs two nonempty segments"));
    }
    if part.l != d_sys.nrows() {
        return Err(Error::param(format!("partition for L = {} applied to {} modes", part.l, d_sys.nrows())));
    }
    if part.a1.iter().any(|s| part.a2.contains(s)) {
        return Err(Error::param("partition segments overlap"));
    }
    let s1 = segment_entropy(d_sys, &part.a1)?;
    let s2 = segment_entropy(d_sys, &part.a2)?;
    let s12 = segment_entropy(d_sys, &part.union())?;
    Ok(s1 + s2 - s12)
}

/// Matrices `G+` and `G-` of the partial transpose for the bipartition `a | rest`,
/// with `a` ordered first.
fn twisted_blocks(d_sys: &ArrayView2<C64>, a: &[usize]) -> (CMatrix, CMatrix, usize) {
    let n = d_sys.nrows();
    let mut order: Vec<usize> = a.to_vec();
    order.extend((0..n).filter(|s| !a.contains(s)));
    let na = a.len();
    let i = C64::new(0.0, 1.0);
    let mut gp = CMatrix::zeros((n, n));
    let mut gm = CMatrix::zeros((n, n));
    for (r, &sr) in order.iter().enumerate() {
        for (c, &sc) in order.iter().enumerate() {
            let mut g = d_sys[[sr, sc]] * 2.0;
            if sr == sc {
                g -= 1.0;
            }
            let (p, m) = match (r < na, c < na) {
                (true, true) => (g, g),
                (false, false) => (-g, -g),
                _ => (i * g, -i * g),
            };
            gp[[r, c]] = p;
            gm[[r, c]] = m;
        }
    }
    (gp, gm, na)
}

/// Eigenvalues of `G* = [1 - (1 + G+ G-)^{-1} (G+ + G-)] / 2`.
///
/// `G- = G+^dagger`, so `K = 1 + G+ G-` is Hermitian positive definite and
/// `X = G+ + G-` is Hermitian; the spectrum of `K^{-1} X` is therefore
/// obtained from the Hermitian matrix `K^{-1/2} X K^{-1/2}`.
pub fn negativity_spectrum(d_sys: &ArrayView2<C64>, a: &[usize]) -> Result<Vec<f64>> {
    let (gp, gm, _) = twisted_blocks(d_sys, a);
    let n = gp.nrows();
    let mut k = gp.dot(&gm);
    for j in 0..n {
        k[[j, j]] += 1.0;
    }
    let x = &gp + &gm;
    let (s, w) = eigh(&k.view())?;
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if !(smin > 0.0) || smax / smin > NEGATIVITY_MAX_COND {
        return Err(Error::numeric(format!("1 + G+G- ill-conditioned: eigenvalues in [{smin:.3e}, {smax:.3e}]")));
    }
    let mut half = w.clone();
    for (mut col, &e) in half.columns_mut().into_iter().zip(s.iter()) {
        let f = 1.0 / e.sqrt();
        col.mapv_inplace(|z| z * f);
    }
    let k_inv_sqrt = half.dot(&dagger(&w.view()));
    let y = k_inv_sqrt.dot(&x).dot(&k_inv_sqrt);
    eigvalsh(&y.view())?
        .iter()
        .map(|&e| {
            let mu = 0.5 * (1.0 - e);
            if !(-1e-8..=1.0 + 1e-8).contains(&mu) {
                return Err(Error::numeric(format!("negativity eigenvalue {mu:.3e} outside [0, 1]")));
            }
            Ok(if mu < NEGATIVITY_SNAP {
                0.0
            } else if mu > 1.0 - NEGATIVITY_SNAP {
                1.0
            } else {
                mu
            })
        })
        .collect()
}

/// Fermionic logarithmic negativity `ln Tr |rho^{T~_A}|` of the Gaussian
/// state of the full inner chain, for the bipartition `a | complement`.
pub fn fermionic_negativity(d_sys: &ArrayView2<C64>, a: &[usize]) -> Result<f64> {
    let n = d_sys.nrows();
    let mut a = a.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.is_empty() || a.len() >= n {
        return Err(Error::param("negativity needs a nonempty proper subset of the chain"));
    }
    if let Some(&s) = a.iter().find(|&&s| s >= n) {
        return Err(Error::param(format!("site {s} out of range ({n} sites)")));
    }
    let mus = negativity_spectrum(d_sys, &a)?;
    let lambdas = occupation_spectrum(d_sys)?;
    let twisted: f64 = mus.iter().map(|&m| (m.sqrt() + (1.0 - m).sqrt()).ln()).sum();
    let mixed: f64 = lambdas.iter().map(|&l| 0.5 * (1.0 - 2.0 * l + 2.0 * l * l).ln()).sum();
    Ok(twisted + mixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::init_random_halffilling_seeded;
    use crate::lattice::{ladder_propagator, LadderParams};
    use ndarray::arr2;
    use ndarray_linalg::{Eig, Solve};
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pure_ladder(l: usize, seed: u64, steps: usize) -> crate::gaussian::CorrelationMatrix {
        let u = ladder_propagator(&LadderParams::new(l, 1.4, 0.8, 1.0)).unwrap();
        let mut d = init_random_halffilling_seeded(l, seed).unwrap();
        for _ in 0..steps {
            d.evolve(&u).unwrap();
        }
        d
    }

    #[test]
    fn entropy_of_simple_spectra() {
        let product = arr2(&[[c(1.0), c(0.0)], [c(0.0), c(0.0)]]);
        assert_eq!(von_neumann_entropy(&product.view()).unwrap(), 0.0);
        assert_eq!(renyi_half_entropy(&product.view()).unwrap(), 0.0);
        let half = arr2(&[[c(0.5)]]);
        assert!((von_neumann_entropy(&half.view()).unwrap() - LN_2).abs() < 1e-15);
        assert!((renyi_half_entropy(&half.view()).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn corrupted_spectrum_is_rejected() {
        let bad = arr2(&[[c(1.01)]]);
        assert!(matches!(von_neumann_entropy(&bad.view()), Err(Error::Numeric(_))));
        let slightly = arr2(&[[c(1.0 + 5e-10)]]);
        assert_eq!(von_neumann_entropy(&slightly.view()).unwrap(), 0.0);
    }

    #[test]
    fn complementary_entropies_agree() {
        let d = pure_ladder(6, 3, 4);
        let n = d.n_modes();
        let a: Vec<usize> = vec![0, 1, 2, 5, 7];
        let b: Vec<usize> = (0..n).filter(|m| !a.contains(m)).collect();
        let sa = von_neumann_entropy(&d.reduce(&a).unwrap().view()).unwrap();
        let sb = von_neumann_entropy(&d.reduce(&b).unwrap().view()).unwrap();
        assert!(sa > 0.1);
        assert!((sa - sb).abs() < 1e-8);
    }

    #[test]
    fn delocalized_pair_mutual_information() {
        let d = arr2(&[[c(0.5), c(0.5)], [c(0.5), c(0.5)]]);
        let part = Partition::new(2, vec![0], vec![1]).unwrap();
        let i = mutual_information(&d.view(), &part).unwrap();
        assert!((i - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn product_state_mutual_information_vanishes() {
        let mut d = CMatrix::zeros((6, 6));
        d[[1, 1]] = c(1.0);
        d[[4, 4]] = c(1.0);
        let part = Partition::arcs(6, 0, 2, 3, 2).unwrap();
        assert_eq!(mutual_information(&d.view(), &part).unwrap(), 0.0);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(4, vec![0, 1], vec![1, 2]).is_err());
        assert!(Partition::new(4, vec![0], vec![4]).is_err());
        let p = Partition::opposing(16, 4).unwrap();
        assert_eq!(p.a1, vec![0, 1, 2, 3]);
        assert_eq!(p.a2, vec![8, 9, 10, 11]);
        assert_eq!(segment(8, 6, 4), vec![0, 1, 6, 7]);
        let d = CMatrix::zeros((4, 4));
        let empty = Partition { a1: vec![0], a2: vec![], l: 4 };
        assert!(mutual_information(&d.view(), &empty).is_err());
    }

    #[test]
    fn negativity_of_product_state_vanishes() {
        let mut d = CMatrix::zeros((5, 5));
        d[[0, 0]] = c(1.0);
        d[[3, 3]] = c(1.0);
        let e = fermionic_negativity(&d.view(), &[0, 1]).unwrap();
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn negativity_vanishes_for_decoupled_blocks() {
        // mixed, but no correlations between A = {0, 1} and B = {2, 3}
        let mut d = CMatrix::zeros((4, 4));
        d[[0, 0]] = c(0.3);
        d[[1, 1]] = c(0.6);
        d[[0, 1]] = C64::new(0.1, 0.2);
        d[[1, 0]] = C64::new(0.1, -0.2);
        d[[2, 2]] = c(0.8);
        d[[3, 3]] = c(0.45);
        let e = fermionic_negativity(&d.view(), &[0, 1]).unwrap();
        assert!(e.abs() < 1e-10, "{e}");
    }

    #[test]
    fn negativity_rejects_bad_subsets() {
        let d = CMatrix::zeros((4, 4));
        assert!(fermionic_negativity(&d.view(), &[]).is_err());
        assert!(fermionic_negativity(&d.view(), &[0, 1, 2, 3]).is_err());
        assert!(fermionic_negativity(&d.view(), &[9]).is_err());
    }

    #[test]
    fn negativity_equals_renyi_half_for_pure_states() {
        // measuring every outer site leaves the inner chain pure
        let l = 6;
        let params = LadderParams::new(l, 2.0, 1.1, 1.0);
        let u = ladder_propagator(&params).unwrap();
        let mut d = init_random_halffilling_seeded(l, 8).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        for step in 0..10 {
            d.evolve(&u).unwrap();
            d.measure_outer_chain(1.0, &mut rng, step).unwrap();
        }
        let sys = d.inner_block();
        for a in [vec![0], vec![0, 1, 2], vec![1, 4]] {
            let e = fermionic_negativity(&sys.view(), &a).unwrap();
            let s = renyi_half_entropy(&reduce(&sys.view(), &a).unwrap().view()).unwrap();
            assert!((e - s).abs() < 1e-6, "{e} vs {s}");
        }
    }

    #[test]
    fn negativity_spectrum_matches_general_eigensolver() {
        let d = pure_ladder(4, 5, 3);
        let sys = d.inner_block();
        let a = [0usize, 1];
        let fast = negativity_spectrum(&sys.view(), &a).unwrap();
        // direct route: eigenvalues of the non-Hermitian G*
        let (gp, gm, _) = twisted_blocks(&sys.view(), &a);
        let n = gp.nrows();
        let mut k = gp.dot(&gm);
        for j in 0..n {
            k[[j, j]] += 1.0;
        }
        let x = &gp + &gm;
        let mut kinv_x = CMatrix::zeros((n, n));
        for j in 0..n {
            let col = k.solve(&x.column(j).to_owned()).unwrap();
            kinv_x.column_mut(j).assign(&col);
        }
        let gstar = kinv_x.mapv(|z| z * -0.5) + crate::linalg::identity(n).mapv(|z| z * 0.5);
        let (vals, _) = gstar.eig().unwrap();
        let mut direct: Vec<f64> = vals
            .iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-8);
                z.re
            })
            .collect();
        direct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut fast_sorted = fast.clone();
        fast_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (p, q) in direct.iter().zip(&fast_sorted) {
            assert!((p - q).abs() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn entropy_invariant_under_relabeling(seed in 0u64..1000, shift in 0usize..8) {
            let d = pure_ladder(4, seed, 2);
            let modes: Vec<usize> = vec![0, 2, 3, 6];
            let mut perm = modes.clone();
            perm.rotate_left(shift % modes.len());
            let s1 = von_neumann_entropy(&d.reduce(&modes).unwrap().view()).unwrap();
            let s2 = von_neumann_entropy(&d.reduce(&perm).unwrap().view()).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-10);
        }

        #[test]
        fn mutual_information_nonnegative(seed in 0u64..1000, len in 1usize..3) {
            let d = pure_ladder(6, seed, 3);
            let sys = d.inner_block();
            let part = Partition::opposing(6, len).unwrap();
            prop_assert!(mutual_information(&sys.view(), &part).unwrap() >= -1e-8);
        }

        #[test]
        fn negativity_nonnegative(seed in 0u64..1000, cut in 1usize..5) {
            let d = pure_ladder(5, seed, 3);
            let sys = d.inner_block();
            let a: Vec<usize> = (0..cut).collect();
            prop_assert!(fermionic_negativity(&sys.view(), &a).unwrap() >= -1e-8);
        }
    }
}
