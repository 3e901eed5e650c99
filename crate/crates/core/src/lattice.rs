//! Ladder geometry, single-particle Hamiltonian and one-period propagator.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linalg::{expm_hermitian, hermitian_defect};
use crate::{CMatrix, Error, Result, C64};

/// Hermiticity tolerance for the single-particle Hamiltonian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chain {
    /// The monitored system (never measured).
    Inner,
    /// The bath leg, measured after every period.
    Outer,
}

impl Chain {
    pub const fn index(self) -> usize {
        match self {
            Chain::Inner => 0,
            Chain::Outer => 1,
        }
    }
}

/// Index of the single-particle mode at `(site, chain)`.
///
/// This is the only place the layout is defined: site-major, chain fastest.
#[inline]
pub const fn mode(site: usize, chain: Chain) -> usize {
    2 * site + chain.index()
}

/// Mode indices of one leg, in site order.
pub fn chain_modes(l: usize, chain: Chain) -> Vec<usize> {
    (0..l).map(|i| mode(i, chain)).collect()
}

/// Physical couplings and protocol parameters of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    /// Number of rungs.
    pub l: usize,
    /// Inner-chain hopping.
    pub t1: f64,
    /// Outer-chain hopping.
    pub t2: f64,
    /// Rung hopping.
    pub t12: f64,
    /// Stroboscopic period.
    pub tau_u: f64,
    /// Per-site measurement probability on the outer chain.
    pub p: f64,
}

impl LadderParams {
    /// Parameters with `t1 = 1` and `tau_u = 1`.
    pub fn new(l: usize, t2: f64, t12: f64, p: f64) -> Self {
        LadderParams { l, t1: 1.0, t2, t12, tau_u: 1.0, p }
    }

    pub fn with_t1(mut self, t1: f64) -> Self {
        self.t1 = t1;
        self
    }

    pub fn with_tau(mut self, tau_u: f64) -> Self {
        self.tau_u = tau_u;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::param(format!("L = {} < 2: periodic wrap is degenerate", self.l)));
        }
        if !(self.tau_u > 0.0 && self.tau_u.is_finite()) {
            return Err(Error::param(format!("tau_u = {} must be positive", self.tau_u)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::param(format!("p = {} outside [0, 1]", self.p)));
        }
        if ![self.t1, self.t2, self.t12].iter().all(|t| t.is_finite()) {
            return Err(Error::param("hopping amplitudes must be finite"));
        }
        Ok(())
    }

    /// Number of single-particle modes, `2L`.
    pub fn n_modes(&self) -> usize {
        2 * self.l
    }

    /// `t1 + t2`.
    pub fn t_sum(&self) -> f64 {
        self.t1 + self.t2
    }

    /// `t1 - t2`.
    pub fn delta(&self) -> f64 {
        self.t1 - self.t2
    }

    fn hopping(&self, chain: Chain) -> f64 {
        match chain {
            Chain::Inner => self.t1,
            Chain::Outer => self.t2,
        }
    }
}

/// Quadratic Hamiltonian `H = sum_ab h_ab c+_a c_b` on the `2L` ladder modes.
#[derive(Debug, Clone)]
pub struct SingleParticleHamiltonian {
    h: CMatrix,
    l: usize,
}

impl SingleParticleHamiltonian {
    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.h.view()
    }

    pub fn rungs(&self) -> usize {
        self.l
    }

    /// Wrap an arbitrary Hermitian matrix, e.g. for tests of the propagator.
    pub fn from_matrix(h: CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() || !h.nrows().is_multiple_of(2) {
            return Err(Error::param("Hamiltonian must be square with an even dimension"));
        }
        let l = h.nrows() / 2;
        Ok(SingleParticleHamiltonian { h, l })
    }
}

/// Single-particle unitary for one stroboscopic period.
#[derive(Debug, Clone)]
pub struct Propagator {
    u: CMatrix,
}

impl Propagator {
    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.u.view()
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn identity(n_modes: usize) -> Self {
        Propagator { u: crate::linalg::identity(n_modes) }
    }
}

pub fn build_single_particle_hamiltonian(params: &LadderParams) -> Result<SingleParticleHamiltonian> {
    params.validate()?;
    let l = params.l;
    let mut h = Array2::<C64>::zeros((2 * l, 2 * l));
    for chain in [Chain::Inner, Chain::Outer] {
        let t = params.hopping(chain);
        for i in 0..l {
            // accumulate: at L = 2 the hop and its periodic image hit the same pair
            let a = mode(i, chain);
            let b = mode((i + 1) % l, chain);
            h[[a, b]] += t;
            h[[b, a]] += t;
        }
    }
    for i in 0..l {
        let a = mode(i, Chain::Inner);
        let b = mode(i, Chain::Outer);
        h[[a, b]] += params.t12;
        h[[b, a]] += params.t12;
    }
    Ok(SingleParticleHamiltonian { h, l })
}

/// `u = exp(-i tau h)` from the Hermitian eigendecomposition of `h`.
pub fn build_propagator(h: &SingleParticleHamiltonian, tau: f64) -> Result<Propagator> {
    let defect = hermitian_defect(&h.matrix());
    if defect > HERMITIAN_TOL {
        return Err(Error::numeric(format!("Hamiltonian not Hermitian (defect {defect:.3e})")));
    }
    Ok(Propagator { u: expm_hermitian(&h.matrix(), tau)? })
}

/// Convenience: Hamiltonian plus propagator for one period `params.tau_u`.
pub fn ladder_propagator(params: &LadderParams) -> Result<Propagator> {
    build_propagator(&build_single_particle_hamiltonian(params)?, params.tau_u)
}

/// Momentum-space Bloch Hamiltonian `[[2 t1 cos k, t12], [t12, 2 t2 cos k]]`.
pub fn bloch_hamiltonian(params: &LadderParams, k: f64) -> Array2<C64> {
    let c = k.cos();
    ndarray::arr2(&[
        [C64::new(2.0 * params.t1 * c, 0.0), C64::new(params.t12, 0.0)],
        [C64::new(params.t12, 0.0), C64::new(2.0 * params.t2 * c, 0.0)],
    ])
}

/// Closed-form `exp(-i tau H_k)` in the chain basis.
///
/// Writing `H_k = t cos k + t12 sx + delta cos k sz` with `t = t1 + t2` and
/// `delta = t1 - t2`, the exponential factorizes into a global phase times a
/// rotation by `omega = sqrt(t12^2 + delta^2 cos^2 k)`. At `omega = 0` the
/// factor `sin(omega tau) / omega` is replaced by its limit `tau`.
pub fn analytic_uk(params: &LadderParams, k: f64, tau: f64) -> Array2<C64> {
    let c = k.cos();
    let dz = params.delta() * c;
    let omega = (params.t12 * params.t12 + dz * dz).sqrt();
    let sinc = if omega == 0.0 { tau } else { (omega * tau).sin() / omega };
    let cosw = (omega * tau).cos();
    let phase = C64::from_polar(1.0, -params.t_sum() * c * tau);
    let i = C64::new(0.0, 1.0);
    let m = ndarray::arr2(&[
        [C64::new(cosw, 0.0) - i * dz * sinc, -i * params.t12 * sinc],
        [-i * params.t12 * sinc, C64::new(cosw, 0.0) + i * dz * sinc],
    ]);
    m.mapv(|z| z * phase)
}

/// Allowed momenta `2 pi m / L`, `m = 0..L`.
pub fn momenta(l: usize) -> Vec<f64> {
    (0..l).map(|m| 2.0 * std::f64::consts::PI * m as f64 / l as f64).collect()
}

/// Unitary `W` with `c_{k,s} = sum_j W[(k,s),(j,s)] c_{j,s}`, `W = e^{-ijk}/sqrt(L)`.
///
/// Rows are ordered like real-space modes with the site index replaced by the
/// momentum index `m`, so `W u W^dagger` is block diagonal in 2x2 chain blocks.
pub fn fourier_transform(l: usize) -> CMatrix {
    let ks = momenta(l);
    let norm = 1.0 / (l as f64).sqrt();
    let mut w = CMatrix::zeros((2 * l, 2 * l));
    for (m, &k) in ks.iter().enumerate() {
        for j in 0..l {
            let z = C64::from_polar(norm, -(j as f64) * k);
            for chain in [Chain::Inner, Chain::Outer] {
                w[[mode(m, chain), mode(j, chain)]] = z;
            }
        }
    }
    w
}
