//! Gaussian pure states of the ladder carried by their correlation matrix,
//! unitary steps and the outer-chain measurement protocol.

use std::io::{Read, Write};

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{chain_modes, mode, Chain, Propagator};
use crate::linalg::{frobenius, symmetrize};
use crate::{CMatrix, Error, Result, C64};

/// Occupations closer than this to 0 or 1 select the deterministic branch.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// A run aborts once `||d^2 - d||_F` exceeds this value.
pub const PURITY_ABORT: f64 = 1e-6;

const SNAPSHOT_MAGIC: &[u8; 4] = b"LDCM";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Occupied,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub step: usize,
    /// Outer-chain site index.
    pub site: usize,
    pub outcome: Outcome,
}

/// Two-point function `d[a, b] = <c+_a c_b>` of a particle-conserving
/// Gaussian state on the `2L` ladder modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    d: CMatrix,
    l: usize,
}

impl CorrelationMatrix {
    pub fn from_matrix(d: CMatrix) -> Result<Self> {
        if d.nrows() != d.ncols() || d.nrows() < 2 || !d.nrows().is_multiple_of(2) {
            return Err(Error::param(format!(
                "correlation matrix must be square with even dimension, got {:?}",
                d.shape()
            )));
        }
        let l = d.nrows() / 2;
        Ok(CorrelationMatrix { d, l })
    }

    /// Product state with the given modes occupied.
    pub fn from_occupied_modes(l: usize, occupied: &[usize]) -> Result<Self> {
        let mut d = CMatrix::zeros((2 * l, 2 * l));
        for &m in occupied {
            if m >= 2 * l {
                return Err(Error::param(format!("mode {m} out of range for L = {l}")));
            }
            d[[m, m]] = C64::new(1.0, 0.0);
        }
        Self::from_matrix(d)
    }

    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.d.view()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.d
    }

    pub fn rungs(&self) -> usize {
        self.l
    }

    pub fn n_modes(&self) -> usize {
        2 * self.l
    }

    /// Total particle number `tr d`.
    pub fn particle_number(&self) -> f64 {
        self.d.diag().iter().map(|z| z.re).sum()
    }

    /// Occupation `<n>` of the outer-chain site `site`.
    pub fn outer_occupation(&self, site: usize) -> f64 {
        let m = mode(site, Chain::Outer);
        self.d[[m, m]].re
    }

    /// `||d^2 - d||_F`, zero for pure Gaussian states.
    pub fn purity_defect(&self) -> f64 {
        purity_defect(&self.d.view())
    }

    pub fn check_purity(&self) -> Result<f64> {
        let defect = self.purity_defect();
        if defect > PURITY_ABORT || !defect.is_finite() {
            return Err(Error::Purity { defect });
        }
        Ok(defect)
    }

    /// `d <- conj(u) d u^T`.
    ///
    /// With `U^dagger c_a U = sum_b u_ab c_b`, the two-point function
    /// `<c+_a c_b>` picks up `conj(u)` on the creation index and `u` on the
    /// annihilation index. The exact-diagonalization comparison in
    /// `nonmarkov::ed` pins this convention.
    pub fn evolve(&mut self, u: &Propagator) -> Result<()> {
        if u.dim() != self.n_modes() {
            return Err(Error::param(format!(
                "propagator dimension {} does not match {} modes",
                u.dim(),
                self.n_modes()
            )));
        }
        let um = u.matrix();
        let ubar = um.mapv(|z| z.conj());
        self.d = ubar.dot(&self.d).dot(&um.t());
        Ok(())
    }

    /// Apply `n_l` on the outer-chain site `site` and renormalize.
    pub fn project_occupied(&mut self, site: usize) -> Result<()> {
        let m = self.outer_mode(site)?;
        let n = self.d[[m, m]].re;
        if n < DEGENERACY_EPS {
            return Err(Error::DegenerateOutcome { site, occupation: n });
        }
        let col: Vec<C64> = self.d.column(m).iter().map(|z| -z / n).collect();
        let row: Vec<C64> = self.d.row(m).to_vec();
        rank_one_update(&mut self.d, &col, &row);
        self.d[[m, m]] = C64::new(1.0, 0.0);
        symmetrize(&mut self.d);
        Ok(())
    }

    /// Apply `1 - n_l` on the outer-chain site `site` and renormalize.
    pub fn project_empty(&mut self, site: usize) -> Result<()> {
        let m = self.outer_mode(site)?;
        let n = self.d[[m, m]].re;
        if 1.0 - n < DEGENERACY_EPS {
            return Err(Error::DegenerateOutcome { site, occupation: n });
        }
        // (delta_am - d_am)(delta_mb - d_mb) / (1 - d_mm) - delta_am delta_mb
        let mut col: Vec<C64> = self.d.column(m).iter().map(|z| -z).collect();
        let mut row: Vec<C64> = self.d.row(m).iter().map(|z| -z).collect();
        col[m] += 1.0;
        row[m] += 1.0;
        let inv = 1.0 / (1.0 - n);
        col.iter_mut().for_each(|z| *z *= inv);
        rank_one_update(&mut self.d, &col, &row);
        self.d[[m, m]] = C64::new(0.0, 0.0);
        symmetrize(&mut self.d);
        Ok(())
    }

    pub fn project(&mut self, site: usize, outcome: Outcome) -> Result<()> {
        match outcome {
            Outcome::Occupied => self.project_occupied(site),
            Outcome::Empty => self.project_empty(site),
        }
    }

    /// One measurement round on the outer chain.
    ///
    /// Sites are visited in ascending order. For every site a number
    /// `p_l in (0, 1]` is drawn; if `p_l <= p` a second number `q_l` decides
    /// the outcome against the current (already conditioned) occupation.
    pub fn measure_outer_chain<R: Rng + ?Sized>(
        &mut self,
        p: f64,
        rng: &mut R,
        step: usize,
    ) -> Result<Vec<MeasurementRecord>> {
        let mut records = Vec::new();
        for site in 0..self.l {
            let p_l = 1.0 - rng.random::<f64>();
            if p_l > p {
                continue;
            }
            let q_l = 1.0 - rng.random::<f64>();
            let n = self.outer_occupation(site);
            let outcome = if n <= DEGENERACY_EPS {
                Outcome::Empty
            } else if n >= 1.0 - DEGENERACY_EPS || q_l <= n {
                Outcome::Occupied
            } else {
                Outcome::Empty
            };
            self.project(site, outcome)?;
            records.push(MeasurementRecord { step, site, outcome });
        }
        Ok(records)
    }

    /// Principal submatrix on `modes`, in the given order.
    pub fn reduce(&self, modes: &[usize]) -> Result<CMatrix> {
        reduce(&self.d.view(), modes)
    }

    /// `L x L` correlation matrix of the inner chain, indexed by site.
    pub fn inner_block(&self) -> CMatrix {
        let modes = chain_modes(self.l, Chain::Inner);
        CMatrix::from_shape_fn((self.l, self.l), |(i, j)| self.d[[modes[i], modes[j]]])
    }

    fn outer_mode(&self, site: usize) -> Result<usize> {
        if site >= self.l {
            return Err(Error::param(format!("outer site {site} out of range for L = {}", self.l)));
        }
        Ok(mode(site, Chain::Outer))
    }

    /// Binary checkpoint: 16-byte header (`LDCM`, `L` as u32, `step` as
    /// u64, little endian) followed by row-major complex128 entries.
    pub fn write_snapshot<W: Write>(&self, mut w: W, step: u64) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.l as u32).to_le_bytes())?;
        w.write_all(&step.to_le_bytes())?;
        for z in self.d.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`write_snapshot`](Self::write_snapshot); returns the state and its step.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<(Self, u64)> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::param("snapshot: bad magic"));
        }
        let l = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let step = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if l < 1 {
            return Err(Error::param("snapshot: zero size"));
        }
        let n = 2 * l;
        let mut buf = vec![0u8; n * n * 16];
        r.read_exact(&mut buf)?;
        let vals: Vec<C64> = buf
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        let d = CMatrix::from_shape_vec((n, n), vals).expect("shape matches buffer");
        Ok((Self::from_matrix(d)?, step))
    }
}

/// Principal submatrix of `d` on `modes`.
pub fn reduce(d: &ArrayView2<C64>, modes: &[usize]) -> Result<CMatrix> {
    if modes.is_empty() {
        return Err(Error::param("empty mode set"));
    }
    let n = d.nrows();
    if let Some(&bad) = modes.iter().find(|&&m| m >= n) {
        return Err(Error::param(format!("mode {bad} out of range ({n} modes)")));
    }
    Ok(CMatrix::from_shape_fn((modes.len(), modes.len()), |(i, j)| d[[modes[i], modes[j]]]))
}

/// `||d^2 - d||_F`.
pub fn purity_defect(d: &ArrayView2<C64>) -> f64 {
    let sq = d.dot(d);
    frobenius(&(sq - d).view())
}

/// `d += col row^T`.
fn rank_one_update(d: &mut CMatrix, col: &[C64], row: &[C64]) {
    for (mut r, &f) in d.rows_mut().into_iter().zip(col) {
        if f == C64::new(0.0, 0.0) {
            continue;
        }
        if let Some(r) = r.as_slice_mut() {
            for (x, v) in r.iter_mut().zip(row) {
                *x += f * v;
            }
        } else {
            r.iter_mut().zip(row).for_each(|(x, v)| *x += f * v);
        }
    }
}

/// Random product state at half filling: `L` of the `2L` modes occupied,
/// chosen uniformly without replacement.
pub fn init_random_halffilling<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Result<CorrelationMatrix> {
    if l < 2 {
        return Err(Error::param(format!("L = {l} < 2")));
    }
    let occupied = sample(rng, 2 * l, l).into_vec();
    CorrelationMatrix::from_occupied_modes(l, &occupied)
}

/// [`init_random_halffilling`] with a fresh generator seeded from `seed`.
pub fn init_random_halffilling_seeded(l: usize, seed: u64) -> Result<CorrelationMatrix> {
    init_random_halffilling(l, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Antiferromagnetic start: even rungs occupy the inner site, odd rungs the outer one.
pub fn init_neel(l: usize) -> Result<CorrelationMatrix> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::param(format!("Neel state needs even L >= 2, got {l}")));
    }
    let occupied: Vec<usize> = (0..l).map(|i| mode(i, if i % 2 == 0 { Chain::Inner } else { Chain::Outer })).collect();
    CorrelationMatrix::from_occupied_modes(l, &occupied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ladder_propagator, LadderParams};
    use crate::linalg::{eigvalsh, hermitian_defect, max_abs_diff};

    fn half_diag(l: usize) -> CorrelationMatrix {
        let mut d = CMatrix::zeros((2 * l, 2 * l));
        for i in 0..2 * l {
            d[[i, i]] = C64::new(0.5, 0.0);
        }
        CorrelationMatrix::from_matrix(d).unwrap()
    }

    fn evolved_state(l: usize, seed: u64) -> CorrelationMatrix {
        let params = LadderParams::new(l, 1.7, 0.9, 1.0);
        let u = ladder_propagator(&params).unwrap();
        let mut d = init_random_halffilling_seeded(l, seed).unwrap();
        for _ in 0..3 {
            d.evolve(&u).unwrap();
        }
        d
    }

    #[test]
    fn random_start_has_l_particles() {
        let d = init_random_halffilling_seeded(2, 7).unwrap();
        let diag: Vec<f64> = d.matrix().diag().iter().map(|z| z.re).collect();
        assert_eq!(diag.iter().filter(|&&x| x == 1.0).count(), 2);
        assert_eq!(diag.iter().filter(|&&x| x == 0.0).count(), 2);
        assert_eq!(d.purity_defect(), 0.0);
    }

    #[test]
    fn random_start_is_deterministic() {
        assert_eq!(init_random_halffilling_seeded(9, 42).unwrap(), init_random_halffilling_seeded(9, 42).unwrap());
    }

    #[test]
    fn random_start_mode_occupation_is_unbiased() {
        // 10^4 seeds, L = 8: every mode occupied with probability 1/2
        let l = 8;
        let n = 10_000;
        let mut counts = vec![0usize; 2 * l];
        for seed in 0..n {
            let d = init_random_halffilling_seeded(l, seed as u64).unwrap();
            for (m, c) in counts.iter_mut().enumerate() {
                if d.matrix()[[m, m]].re == 1.0 {
                    *c += 1;
                }
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.5).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn neel_pattern() {
        let d = init_neel(2).unwrap();
        assert_eq!(d.particle_number(), 2.0);
        assert_eq!(d.matrix()[[mode(0, Chain::Inner), mode(0, Chain::Inner)]].re, 1.0);
        assert_eq!(d.matrix()[[mode(1, Chain::Outer), mode(1, Chain::Outer)]].re, 1.0);
        let d4 = init_neel(4).unwrap();
        assert_eq!(d4.particle_number(), 4.0);
        assert_eq!(d4.matrix().dot(&d4.matrix()), d4.matrix());
        assert!(matches!(init_neel(3), Err(Error::Parameter(_))));
    }

    #[test]
    fn evolve_identity_is_noop() {
        let mut d = evolved_state(4, 1);
        let before = d.clone();
        d.evolve(&Propagator::identity(8)).unwrap();
        assert!(max_abs_diff(&d.matrix(), &before.matrix()) < 1e-15);
    }

    #[test]
    fn evolve_preserves_spectrum() {
        let mut d = evolved_state(5, 3);
        let before = eigvalsh(&d.matrix()).unwrap();
        let u = ladder_propagator(&LadderParams::new(5, 3.1, 0.2, 0.0)).unwrap();
        d.evolve(&u).unwrap();
        let after = eigvalsh(&d.matrix()).unwrap();
        for (a, b) in before.iter().zip(after.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_dimension_mismatch() {
        let mut d = init_neel(4).unwrap();
        assert!(matches!(d.evolve(&Propagator::identity(6)), Err(Error::Parameter(_))));
    }

    #[test]
    fn projections_on_uncorrelated_state() {
        let mut d = half_diag(2);
        d.project_occupied(1).unwrap();
        let m = mode(1, Chain::Outer);
        for i in 0..4 {
            let expect = if i == m { 1.0 } else { 0.5 };
            assert_eq!(d.matrix()[[i, i]].re, expect);
        }
        let mut e = half_diag(2);
        e.project_empty(1).unwrap();
        for i in 0..4 {
            let expect = if i == m { 0.0 } else { 0.5 };
            assert_eq!(e.matrix()[[i, i]].re, expect);
        }
        assert_eq!(e.matrix().iter().filter(|z| z.im != 0.0).count(), 0);
    }

    #[test]
    fn projection_pins_occupation_and_is_idempotent() {
        for seed in 0..5 {
            let base = evolved_state(4, seed);
            for site in 0..4 {
                let mut occ = base.clone();
                occ.project_occupied(site).unwrap();
                assert_eq!(occ.outer_occupation(site), 1.0);
                assert!(occ.purity_defect() < 1e-8);
                let once = occ.clone();
                occ.project_occupied(site).unwrap();
                assert!(max_abs_diff(&occ.matrix(), &once.matrix()) < 1e-12);

                let mut emp = base.clone();
                emp.project_empty(site).unwrap();
                assert_eq!(emp.outer_occupation(site), 0.0);
                assert!(emp.purity_defect() < 1e-8);
                let once = emp.clone();
                emp.project_empty(site).unwrap();
                assert!(max_abs_diff(&emp.matrix(), &once.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_projections_are_rejected() {
        let mut d = CorrelationMatrix::from_occupied_modes(2, &[0, 2]).unwrap();
        assert!(matches!(d.project_occupied(0), Err(Error::DegenerateOutcome { .. })));
        let mut d = CorrelationMatrix::from_occupied_modes(2, &[1, 2]).unwrap();
        assert!(matches!(d.project_empty(0), Err(Error::DegenerateOutcome { .. })));
    }

    #[test]
    fn measurement_round_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = evolved_state(4, 9);
        let before = d.clone();
        assert!(d.measure_outer_chain(0.0, &mut rng, 0).unwrap().is_empty());
        assert_eq!(d, before);
        let recs = d.measure_outer_chain(1.0, &mut rng, 3).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().enumerate().all(|(i, r)| r.site == i && r.step == 3));
        assert!((d.particle_number() - 4.0).abs() < 1e-10);
        assert!(d.purity_defect() < 1e-8);
    }

    #[test]
    fn measurement_leaves_inner_chain_alone_without_coupling() {
        let params = LadderParams::new(6, 1.3, 0.0, 1.0);
        let u = ladder_propagator(&params).unwrap();
        let mut d = init_random_halffilling_seeded(6, 11).unwrap();
        // entangle within each leg only
        for _ in 0..4 {
            d.evolve(&u).unwrap();
        }
        let inner = d.inner_block();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        d.measure_outer_chain(1.0, &mut rng, 0).unwrap();
        assert!(max_abs_diff(&inner.view(), &d.inner_block().view()) < 1e-12);
    }

    #[test]
    fn reduce_behaviour() {
        let d = evolved_state(3, 4);
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(d.reduce(&all).unwrap(), d.matrix().to_owned());
        assert!(d.reduce(&[]).is_err());
        assert!(d.reduce(&[6]).is_err());
        let p = CorrelationMatrix::from_occupied_modes(3, &[0, 3, 4]).unwrap();
        assert_eq!(p.reduce(&[3]).unwrap()[[0, 0]], C64::new(1.0, 0.0));
    }

    #[test]
    fn purity_defect_of_half_filled_mixture() {
        let mut d = CMatrix::zeros((2, 2));
        d[[0, 0]] = C64::new(0.5, 0.0);
        d[[1, 1]] = C64::new(0.5, 0.0);
        let v = purity_defect(&d.view());
        assert!((v - (2.0f64 * 0.0625).sqrt()).abs() < 1e-15);
        assert!((v - 0.353_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn long_run_stays_pure() {
        let params = LadderParams::new(64, 1.5, std::f64::consts::FRAC_PI_2, 1.0);
        let u = ladder_propagator(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut d = init_random_halffilling(64, &mut rng).unwrap();
        for step in 0..100 {
            d.evolve(&u).unwrap();
            d.measure_outer_chain(1.0, &mut rng, step).unwrap();
        }
        assert!(d.purity_defect() <= 1e-8, "{}", d.purity_defect());
        assert!((d.particle_number() - 64.0).abs() < 1e-10);
        assert!(hermitian_defect(&d.matrix()) < 1e-10);
    }

    #[test]
    fn snapshot_header_layout() {
        let d = init_neel(2).unwrap();
        let mut buf = Vec::new();
        d.write_snapshot(&mut buf, 17).unwrap();
        assert_eq!(buf.len(), 16 + 16 * 16);
        assert_eq!(&buf[0..4], b"LDCM");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 17);
        let (back, step) = CorrelationMatrix::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(step, 17);
        assert_eq!(back, d);
    }
}
