//! Random initial conditions for the non-Markovianity measures.

use std::fmt;
use std::str::FromStr;

use ndarray::s;
use ndarray_linalg::QR;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gaussian::CorrelationMatrix;
use crate::linalg::{dagger, trace};
use crate::{CMatrix, Error, Result, C64};

use super::channel::DensityMatrix;
use super::fock::{slater_state, FockBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Two independent Haar-random half-filled Slater determinants.
    RandomPureProduct,
    /// Two independent full-rank mixed states of the half-filled sector.
    RandomMixed,
    /// Two Slater determinants sharing all orbitals but one.
    OrthogonalPure,
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_pure_product" => Ok(PairMode::RandomPureProduct),
            "random_mixed" => Ok(PairMode::RandomMixed),
            "orthogonal_pure" => Ok(PairMode::OrthogonalPure),
            other => Err(Error::param(format!("unknown pair mode '{other}'"))),
        }
    }
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairMode::RandomPureProduct => "random_pure_product",
            PairMode::RandomMixed => "random_mixed",
            PairMode::OrthogonalPure => "orthogonal_pure",
        })
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_shape_simple_fn((rows, cols), || complex_normal(rng))
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix
/// with the phases of `R` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CMatrix> {
    let g = ginibre(n, n, rng);
    let (mut q, r) = g.qr()?;
    for (j, mut col) in q.columns_mut().into_iter().enumerate() {
        let d = r[[j, j]];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        col.mapv_inplace(|z| z * phase);
    }
    Ok(q)
}

#[derive(Debug, Clone)]
pub enum InitialState {
    /// Orbitals in the columns (`2L x N`).
    Slater(CMatrix),
    /// Density matrix on the half-filled sector.
    Mixed(CMatrix),
}

impl InitialState {
    /// Correlation matrix of a Slater state, `conj(phi) phi^T`.
    pub fn correlation(&self) -> Result<CorrelationMatrix> {
        match self {
            InitialState::Slater(phi) => CorrelationMatrix::from_matrix(phi.mapv(|z| z.conj()).dot(&phi.t())),
            InitialState::Mixed(_) => Err(Error::param("a mixed initial state has no Gaussian correlation matrix")),
        }
    }

    pub fn density_matrix(&self, basis: &FockBasis) -> Result<DensityMatrix> {
        match self {
            InitialState::Slater(phi) => DensityMatrix::pure(&slater_state(basis, phi)?, basis.clone()),
            InitialState::Mixed(rho) => DensityMatrix::new(rho.clone(), basis.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialPair {
    pub first: InitialState,
    pub second: InitialState,
}

/// Samples a pair of half-filled initial states of an `l`-rung ladder.
pub fn sample_initial_pair<R: Rng + ?Sized>(rng: &mut R, l: usize, mode: PairMode) -> Result<InitialPair> {
    let m = 2 * l;
    match mode {
        PairMode::RandomPureProduct => {
            let a = haar_unitary(m, rng)?;
            let b = haar_unitary(m, rng)?;
            Ok(InitialPair {
                first: InitialState::Slater(a.slice(s![.., ..l]).to_owned()),
                second: InitialState::Slater(b.slice(s![.., ..l]).to_owned()),
            })
        }
        PairMode::OrthogonalPure => {
            let u = haar_unitary(m, rng)?;
            let first = u.slice(s![.., ..l]).to_owned();
            let mut second = first.clone();
            second.column_mut(l - 1).assign(&u.column(l));
            Ok(InitialPair { first: InitialState::Slater(first), second: InitialState::Slater(second) })
        }
        PairMode::RandomMixed => {
            let dim = FockBasis::sector(m, l)?.dim();
            let mut draw = || {
                let g = ginibre(dim, dim, rng);
                let rho = g.dot(&dagger(&g.view()));
                let tr = trace(&rho.view()).re;
                let mut rho = rho.mapv(|z| z / tr);
                crate::linalg::symmetrize(&mut rho);
                rho
            };
            let first = draw();
            let second = draw();
            Ok(InitialPair { first: InitialState::Mixed(first), second: InitialState::Mixed(second) })
        }
    }
}
