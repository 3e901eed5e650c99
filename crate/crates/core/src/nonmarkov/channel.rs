//! Trajectory-averaged dynamics of the full ladder density matrix.
//!
//! Averaging the stroboscopic protocol over measurement records gives, per
//! cycle, unitary conjugation followed by independent dephasing of every outer
//! site: `rho -> (1 - p) rho + p (P1 rho P1 + P0 rho P0)`. In the occupation
//! basis the dephasing multiplies `rho[a, b]` by `(1 - p)^k`, with `k` the
//! number of outer sites whose occupation differs between `a` and `b`.

use ndarray::Array2;

use crate::lattice::{mode, Chain, LadderParams};
use crate::linalg::{dagger, eigvalsh, hermitian_defect, trace};
use crate::{CMatrix, Error, Result, C64};

use super::ed::many_body_propagator;
use super::fock::{check_density_capacity, partial_trace, FockBasis};

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub rho: CMatrix,
    pub basis: FockBasis,
}

impl DensityMatrix {
    pub fn new(rho: CMatrix, basis: FockBasis) -> Result<Self> {
        if rho.dim() != (basis.dim(), basis.dim()) {
            return Err(Error::param("density matrix does not match its basis"));
        }
        Ok(DensityMatrix { rho, basis })
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &[C64], basis: FockBasis) -> Result<Self> {
        let v = ndarray::Array1::from(psi.to_vec());
        let rho = Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj());
        Self::new(rho, basis)
    }

    /// Hermiticity, unit trace and positivity within the stated tolerances.
    pub fn validate(&self) -> Result<()> {
        let h = hermitian_defect(&self.rho.view());
        if h > 1e-10 {
            return Err(Error::numeric(format!("density matrix Hermiticity defect {h:.3e}")));
        }
        let tr = trace(&self.rho.view());
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::numeric(format!("density matrix trace {tr}")));
        }
        let min = eigvalsh(&self.rho.view())?[0];
        if min < -1e-9 {
            return Err(Error::numeric(format!("density matrix eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Reduced state of the inner chain on its own `2^L` Fock space.
    pub fn reduce_to_inner(&self) -> Result<CMatrix> {
        reduce_to_inner(&self.basis, &self.rho)
    }
}

/// Partial trace of any operator over the outer chain.
pub fn reduce_to_inner(basis: &FockBasis, op: &CMatrix) -> Result<CMatrix> {
    let l = basis.n_modes() / 2;
    let keep: Vec<usize> = (0..l).map(|i| mode(i, Chain::Inner)).collect();
    partial_trace(basis, op, &keep)
}

/// Averaged channel for fixed parameters on a number-closed basis.
#[derive(Debug, Clone)]
pub struct AveragedChannel {
    basis: FockBasis,
    u: CMatrix,
    u_dag: CMatrix,
    mask: Array2<f64>,
}

impl AveragedChannel {
    pub fn new(params: &LadderParams, basis: FockBasis) -> Result<Self> {
        params.validate()?;
        if basis.n_modes() != params.n_modes() {
            return Err(Error::param("basis does not match the ladder size"));
        }
        check_density_capacity(basis.n_modes())?;
        let u = many_body_propagator(&basis, params)?;
        let u_dag = dagger(&u.view());
        let outer: u32 = (0..params.l).map(|i| 1u32 << (basis.n_modes() - 1 - mode(i, Chain::Outer))).sum();
        let keep = 1.0 - params.p;
        let states = basis.states();
        let mask = Array2::from_shape_fn((basis.dim(), basis.dim()), |(a, b)| {
            keep.powi(((states[a] ^ states[b]) & outer).count_ones() as i32)
        });
        Ok(AveragedChannel { basis, u, u_dag, mask })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    /// One cycle applied to any operator (the map is linear).
    pub fn apply(&self, op: &CMatrix) -> CMatrix {
        let mut out = self.u.dot(op).dot(&self.u_dag);
        out.zip_mut_with(&self.mask, |z, &m| *z *= m);
        out
    }

    pub fn step(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.basis != self.basis {
            return Err(Error::param("density matrix basis differs from the channel basis"));
        }
        DensityMatrix::new(self.apply(&rho.rho), self.basis.clone())
    }
}

/// One averaged cycle on the full Fock space of the ladder.
pub fn averaged_channel_step(rho: &DensityMatrix, params: &LadderParams) -> Result<DensityMatrix> {
    AveragedChannel::new(params, rho.basis.clone())?.step(rho)
}

/// `Tr |r1 - r2| / 2` for Hermitian arguments.
pub fn trace_distance(r1: &CMatrix, r2: &CMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::param(format!("trace distance of {:?} and {:?}", r1.dim(), r2.dim())));
    }
    half_trace_norm(&(r1 - r2))
}

/// `Tr |delta| / 2` for a Hermitian difference operator.
pub fn half_trace_norm(delta: &CMatrix) -> Result<f64> {
    Ok(0.5 * eigvalsh(&delta.view())?.iter().map(|e| e.abs()).sum::<f64>())
}
