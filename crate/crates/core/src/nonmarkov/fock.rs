//! Occupation-number basis and fermionic operators for exact diagonalization.
//!
//! A basis state is a bit string over the `M` modes of the lattice layout;
//! mode `j` sits at bit `M - 1 - j`, so mode 0 is the most significant bit and
//! `|n_0 n_1 ... n_{M-1}> = (c+_0)^{n_0} (c+_1)^{n_1} ... |0>`. Jordan-Wigner
//! signs count occupied modes with a smaller index.

use ndarray::Array2;

use crate::linalg::{dagger, eigh};
use crate::{CMatrix, Error, Result, C64};

/// Largest number of modes handled by state-vector code (`L <= 5`).
pub const MAX_VECTOR_MODES: usize = 10;
/// Largest number of modes handled by density-matrix code (`L <= 4`).
pub const MAX_DENSITY_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_modes: usize,
    states: Vec<u32>,
    lookup: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl FockBasis {
    /// All `2^M` occupation strings.
    pub fn full(n_modes: usize) -> Result<Self> {
        check_capacity(n_modes, MAX_VECTOR_MODES)?;
        Ok(Self::from_states(n_modes, (0..1u32 << n_modes).collect()))
    }

    /// Strings with exactly `n_particles` occupied modes, in increasing order.
    pub fn sector(n_modes: usize, n_particles: usize) -> Result<Self> {
        check_capacity(n_modes, MAX_VECTOR_MODES)?;
        if n_particles > n_modes {
            return Err(Error::param(format!("{n_particles} particles in {n_modes} modes")));
        }
        let states = (0..1u32 << n_modes).filter(|s| s.count_ones() as usize == n_particles).collect();
        Ok(Self::from_states(n_modes, states))
    }

    fn from_states(n_modes: usize, states: Vec<u32>) -> Self {
        let mut lookup = vec![ABSENT; 1usize << n_modes];
        for (i, &s) in states.iter().enumerate() {
            lookup[s as usize] = i as u32;
        }
        FockBasis { n_modes, states, lookup }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u32 {
        self.states[i]
    }

    pub fn index_of(&self, s: u32) -> Option<usize> {
        match self.lookup.get(s as usize) {
            Some(&i) if i != ABSENT => Some(i as usize),
            _ => None,
        }
    }

    fn bit(&self, mode: usize) -> u32 {
        1 << (self.n_modes - 1 - mode)
    }

    pub fn occupied(&self, s: u32, mode: usize) -> bool {
        s & self.bit(mode) != 0
    }

    /// Occupied modes with index below `mode`.
    fn count_before(&self, s: u32, mode: usize) -> u32 {
        let higher = !((self.bit(mode) << 1).wrapping_sub(1));
        (s & higher).count_ones()
    }

    /// `c+_i c_j |s> = sign |s'>`, or `None` when the result vanishes.
    pub fn hop(&self, s: u32, i: usize, j: usize) -> Option<(f64, u32)> {
        if !self.occupied(s, j) {
            return None;
        }
        let mut sign = self.count_before(s, j);
        let t = s & !self.bit(j);
        if self.occupied(t, i) {
            return None;
        }
        sign += self.count_before(t, i);
        let out = t | self.bit(i);
        Some((if sign.is_multiple_of(2) { 1.0 } else { -1.0 }, out))
    }

    /// `c+_j |s>`.
    pub fn create(&self, s: u32, j: usize) -> Option<(f64, u32)> {
        if self.occupied(s, j) {
            return None;
        }
        let sign = if self.count_before(s, j).is_multiple_of(2) { 1.0 } else { -1.0 };
        Some((sign, s | self.bit(j)))
    }
}

fn check_capacity(n_modes: usize, limit: usize) -> Result<()> {
    if n_modes == 0 || n_modes > limit {
        return Err(Error::Capacity(format!("{n_modes} modes requested, exact diagonalization supports 1..={limit}")));
    }
    Ok(())
}

pub(crate) fn check_density_capacity(n_modes: usize) -> Result<()> {
    check_capacity(n_modes, MAX_DENSITY_MODES)
}

/// Many-body matrix of `sum_ij h_ij c+_i c_j` in a particle-number-closed basis.
pub fn quadratic_operator(basis: &FockBasis, h: &CMatrix) -> Result<CMatrix> {
    let m = basis.n_modes();
    if h.dim() != (m, m) {
        return Err(Error::param(format!("{:?} matrix for {m} modes", h.dim())));
    }
    let mut op = CMatrix::zeros((basis.dim(), basis.dim()));
    for (col, &s) in basis.states().iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                let hij = h[[i, j]];
                if hij == C64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((sign, t)) = basis.hop(s, i, j) {
                    let row = basis.index_of(t).ok_or_else(|| Error::param("basis is not closed under hopping"))?;
                    op[[row, col]] += hij * sign;
                }
            }
        }
    }
    Ok(op)
}

/// Matrix of `c+_j` on the full basis.
pub fn creation_operator(basis: &FockBasis, j: usize) -> CMatrix {
    let mut op = CMatrix::zeros((basis.dim(), basis.dim()));
    for (col, &s) in basis.states().iter().enumerate() {
        if let Some((sign, t)) = basis.create(s, j) {
            if let Some(row) = basis.index_of(t) {
                op[[row, col]] = C64::new(sign, 0.0);
            }
        }
    }
    op
}

/// `<psi| c+_i c_j |psi>` for a normalized state vector.
pub fn state_correlation(basis: &FockBasis, psi: &[C64]) -> CMatrix {
    let m = basis.n_modes();
    let mut d = CMatrix::zeros((m, m));
    for (col, &s) in basis.states().iter().enumerate() {
        let amp = psi[col];
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                if let Some((sign, t)) = basis.hop(s, i, j) {
                    if let Some(row) = basis.index_of(t) {
                        d[[i, j]] += psi[row].conj() * amp * sign;
                    }
                }
            }
        }
    }
    d
}

/// `Tr(rho c+_i c_j)`.
pub fn density_correlation(basis: &FockBasis, rho: &CMatrix) -> CMatrix {
    let m = basis.n_modes();
    let mut d = CMatrix::zeros((m, m));
    for (a, &s) in basis.states().iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                if let Some((sign, t)) = basis.hop(s, i, j) {
                    if let Some(b) = basis.index_of(t) {
                        d[[i, j]] += rho[[a, b]] * sign;
                    }
                }
            }
        }
    }
    d
}

/// Projects `psi` onto `n_mode = 1` (`occupied`) or `0`; returns the Born
/// probability and the normalized post-measurement state.
pub fn project_state(basis: &FockBasis, psi: &[C64], mode: usize, occupied: bool) -> Result<(f64, Vec<C64>)> {
    let mut out: Vec<C64> = basis
        .states()
        .iter()
        .zip(psi)
        .map(|(&s, &a)| if basis.occupied(s, mode) == occupied { a } else { C64::new(0.0, 0.0) })
        .collect();
    let prob: f64 = out.iter().map(|z| z.norm_sqr()).sum();
    if prob <= 1e-14 {
        return Err(Error::Oracle(format!("outcome at mode {mode} has zero probability")));
    }
    let norm = prob.sqrt();
    out.iter_mut().for_each(|z| *z /= norm);
    Ok((prob, out))
}

/// Slater determinant `prod_k (sum_j phi_jk c+_j) |0>` for orthonormal
/// orbitals in the columns of `phi`. Its correlation matrix is
/// `conj(phi) phi^T`.
pub fn slater_state(basis: &FockBasis, phi: &CMatrix) -> Result<Vec<C64>> {
    if phi.nrows() != basis.n_modes() {
        return Err(Error::param("orbital matrix does not match the basis"));
    }
    let full = FockBasis::full(basis.n_modes())?;
    let mut psi = vec![C64::new(0.0, 0.0); full.dim()];
    psi[0] = C64::new(1.0, 0.0);
    for k in (0..phi.ncols()).rev() {
        let mut next = vec![C64::new(0.0, 0.0); full.dim()];
        for (col, &s) in full.states().iter().enumerate() {
            if psi[col] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..full.n_modes() {
                if let Some((sign, t)) = full.create(s, j) {
                    next[t as usize] += phi[[j, k]] * psi[col] * sign;
                }
            }
        }
        psi = next;
    }
    let kept: f64 = basis.states().iter().map(|&s| psi[s as usize].norm_sqr()).sum();
    if (kept - 1.0).abs() > 1e-10 {
        return Err(Error::param("Slater state does not lie in the requested basis"));
    }
    Ok(basis.states().iter().map(|&s| psi[s as usize]).collect())
}

/// Density matrix on the full basis of the particle-conserving Gaussian state
/// with correlation matrix `d`, built as a product over normal modes.
pub fn gaussian_density_matrix(d: &CMatrix) -> Result<CMatrix> {
    let m = d.nrows();
    check_capacity(m, MAX_VECTOR_MODES)?;
    let basis = FockBasis::full(m)?;
    let (n, phi) = eigh(&d.mapv(|z| z.conj()).view())?;
    let creators: Vec<CMatrix> = (0..m).map(|j| creation_operator(&basis, j)).collect();
    let dim = basis.dim();
    let mut rho = crate::linalg::identity(dim);
    for k in 0..m {
        let mut fdag = CMatrix::zeros((dim, dim));
        for (j, cj) in creators.iter().enumerate() {
            fdag.scaled_add(phi[[j, k]], cj);
        }
        let f = dagger(&fdag.view());
        let nk = n[k].clamp(0.0, 1.0);
        let occ = fdag.dot(&f);
        let emp = f.dot(&fdag);
        let factor = occ.mapv(|z| z * nk) + emp.mapv(|z| z * (1.0 - nk));
        rho = rho.dot(&factor);
    }
    Ok(rho)
}

/// Sign of moving the kept modes (in ascending order) in front of the traced
/// ones for the basis state `s`.
fn reorder_sign(basis: &FockBasis, s: u32, keep: &[bool]) -> f64 {
    let mut traced_seen = 0u32;
    let mut flips = 0u32;
    for mode in 0..basis.n_modes() {
        if !basis.occupied(s, mode) {
            continue;
        }
        if keep[mode] {
            flips += traced_seen;
        } else {
            traced_seen += 1;
        }
    }
    if flips.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Partial trace keeping the modes `keep` (ascending). The result lives on
/// the full `2^|keep|` basis of the kept modes in their original order.
pub fn partial_trace(basis: &FockBasis, rho: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    let m = basis.n_modes();
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= m) {
        return Err(Error::param("kept modes must be ascending and in range"));
    }
    let mut kept = vec![false; m];
    keep.iter().for_each(|&k| kept[k] = true);
    let nk = keep.len();
    let split = |s: u32| -> (usize, u32) {
        let mut inner = 0usize;
        let mut outer = 0u32;
        for mode in 0..m {
            let occ = basis.occupied(s, mode);
            if kept[mode] {
                inner = (inner << 1) | occ as usize;
            } else {
                outer = (outer << 1) | occ as u32;
            }
        }
        (inner, outer)
    };
    let info: Vec<(usize, u32, f64)> = basis
        .states()
        .iter()
        .map(|&s| {
            let (a, b) = split(s);
            (a, b, reorder_sign(basis, s, &kept))
        })
        .collect();
    let mut groups: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (idx, &(_, outer, _)) in info.iter().enumerate() {
        groups.entry(outer).or_default().push(idx);
    }
    let mut red = CMatrix::zeros((1 << nk, 1 << nk));
    for members in groups.values() {
        for &x in members {
            for &y in members {
                let (ax, _, sx) = info[x];
                let (ay, _, sy) = info[y];
                red[[ax, ay]] += rho[[x, y]] * (sx * sy);
            }
        }
    }
    Ok(red)
}

/// `ln Tr |rho^{T~_A}|` for a density matrix on the full basis, with `A` the
/// first `n_a` modes, from the fermionic partial transpose
/// `|n_A, n_B><m_A, m_B| -> i^{[(t_A + s_A) mod 2]} (-1)^{(t_A + s_A)(t_B + s_B)} |m_A, n_B><n_A, m_B|`
/// where `t`, `s` count particles in the ket and bra strings.
pub fn twisted_negativity(rho: &CMatrix, n_modes: usize, n_a: usize) -> Result<f64> {
    use ndarray_linalg::SVD;
    let dim = 1usize << n_modes;
    if rho.dim() != (dim, dim) || n_a == 0 || n_a >= n_modes {
        return Err(Error::param("twisted negativity needs a full-basis matrix and 0 < n_a < M"));
    }
    let nb = n_modes - n_a;
    let mask_b = (1usize << nb) - 1;
    let mut out: Array2<C64> = Array2::zeros((dim, dim));
    for ket in 0..dim {
        let (ka, kb) = (ket >> nb, ket & mask_b);
        for bra in 0..dim {
            let z = rho[[ket, bra]];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let (ba, bb) = (bra >> nb, bra & mask_b);
            let ta = ka.count_ones() + ba.count_ones();
            let tb = kb.count_ones() + bb.count_ones();
            let mut phase = if ta % 2 == 1 { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) };
            if (ta * tb) % 2 == 1 {
                phase = -phase;
            }
            out[[(ba << nb) | kb, (ka << nb) | bb]] += z * phase;
        }
    }
    let (_, s, _) = out.svd(false, false)?;
    Ok(s.sum().ln())
}

/// `2 ln Tr sqrt(rho)`.
pub fn renyi_half(rho: &CMatrix) -> Result<f64> {
    let vals = crate::linalg::eigvalsh(&rho.view())?;
    Ok(2.0 * vals.iter().map(|&x| x.max(0.0).sqrt()).sum::<f64>().ln())
}
