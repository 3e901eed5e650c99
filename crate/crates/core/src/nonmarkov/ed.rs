//! State-vector exact diagonalization of the ladder.

use crate::gaussian::Outcome;
use crate::lattice::{build_single_particle_hamiltonian, mode, Chain, LadderParams};
use crate::linalg::expm_hermitian;
use crate::{CMatrix, Error, Result, C64};

use super::fock::{project_state, quadratic_operator, state_correlation, FockBasis, MAX_VECTOR_MODES};

/// Many-body Hamiltonian on the full `2^(2L)` Fock space.
pub fn build_fock_hamiltonian(params: &LadderParams) -> Result<CMatrix> {
    params.validate()?;
    let basis = ed_basis(params)?;
    hamiltonian_in(&basis, params)
}

/// Full Fock basis of the ladder, refusing sizes beyond `L = 5`.
pub fn ed_basis(params: &LadderParams) -> Result<FockBasis> {
    let m = params.n_modes();
    if m > MAX_VECTOR_MODES {
        return Err(Error::Capacity(format!(
            "L = {} exceeds the state-vector limit L <= {}",
            params.l,
            MAX_VECTOR_MODES / 2
        )));
    }
    FockBasis::full(m)
}

/// Many-body Hamiltonian restricted to a number-closed basis.
pub fn hamiltonian_in(basis: &FockBasis, params: &LadderParams) -> Result<CMatrix> {
    let h = build_single_particle_hamiltonian(params)?;
    quadratic_operator(basis, &h.matrix().to_owned())
}

/// `exp(-i tau_u H)` on `basis`.
pub fn many_body_propagator(basis: &FockBasis, params: &LadderParams) -> Result<CMatrix> {
    let h = hamiltonian_in(basis, params)?;
    expm_hermitian(&h.view(), params.tau_u)
}

/// One cycle of a reference evolution.
#[derive(Debug, Clone)]
pub struct EdStep {
    pub psi: Vec<C64>,
    pub correlation: CMatrix,
    /// Born probability of this cycle's scripted outcomes, given the past.
    pub probability: f64,
}

/// Unitary cycles each followed by the scripted projections
/// `(outer site, outcome)` in the listed order.
pub fn ed_reference_evolution(
    psi0: &[C64],
    params: &LadderParams,
    script: &[Vec<(usize, Outcome)>],
) -> Result<Vec<EdStep>> {
    let basis = ed_basis(params)?;
    if psi0.len() != basis.dim() {
        return Err(Error::param("initial state does not match the Fock space"));
    }
    let u = many_body_propagator(&basis, params)?;
    let mut psi = psi0.to_vec();
    let mut out = Vec::with_capacity(script.len());
    for round in script {
        psi = u.dot(&ndarray::Array1::from(psi)).to_vec();
        let mut probability = 1.0;
        for &(site, outcome) in round {
            if site >= params.l {
                return Err(Error::param(format!("outer site {site} out of range")));
            }
            let m = mode(site, Chain::Outer);
            let (p, post) = project_state(&basis, &psi, m, outcome == Outcome::Occupied)?;
            probability *= p;
            psi = post;
        }
        let correlation = state_correlation(&basis, &psi);
        out.push(EdStep { psi: psi.clone(), correlation, probability });
    }
    Ok(out)
}

/// Joint Born probabilities of measuring every outer site once after one
/// unitary cycle, indexed by the bit pattern of outcomes (site 0 first, most
/// significant).
pub fn joint_outer_distribution(psi0: &[C64], params: &LadderParams) -> Result<Vec<f64>> {
    let basis = ed_basis(params)?;
    let u = many_body_propagator(&basis, params)?;
    let psi = u.dot(&ndarray::Array1::from(psi0.to_vec()));
    let l = params.l;
    let mut probs = vec![0.0; 1 << l];
    for (amp, &s) in psi.iter().zip(basis.states()) {
        let mut pattern = 0usize;
        for site in 0..l {
            pattern = (pattern << 1) | basis.occupied(s, mode(site, Chain::Outer)) as usize;
        }
        probs[pattern] += amp.norm_sqr();
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, hermitian_defect};

    #[test]
    fn capacity_is_enforced() {
        let p = LadderParams::new(6, 1.0, 0.5, 1.0);
        assert!(matches!(build_fock_hamiltonian(&p), Err(Error::Capacity(_))));
    }

    #[test]
    fn single_particle_sector_matches_hopping_matrix() {
        let p = LadderParams::new(2, 1.7, 0.6, 1.0);
        let basis = FockBasis::sector(4, 1).unwrap();
        let h1 = hamiltonian_in(&basis, &p).unwrap();
        let mut a = eigvalsh(&h1.view()).unwrap().to_vec();
        let h = build_single_particle_hamiltonian(&p).unwrap();
        let mut b = eigvalsh(&h.matrix()).unwrap().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_filled_fermi_sea() {
        let p = LadderParams::new(3, 1.3, 0.7, 1.0);
        let h = build_fock_hamiltonian(&p).unwrap();
        assert!(hermitian_defect(&h.view()) < 1e-14);
        let e0 = eigvalsh(&h.view()).unwrap()[0];
        let sp = eigvalsh(&build_single_particle_hamiltonian(&p).unwrap().matrix()).unwrap();
        let filled: f64 = sp.iter().filter(|&&e| e < 0.0).sum();
        assert!((e0 - filled).abs() < 1e-10);
    }

    #[test]
    fn decoupled_chains_conserve_chain_number() {
        let p = LadderParams::new(2, 1.0, 0.0, 1.0);
        let basis = ed_basis(&p).unwrap();
        let h = hamiltonian_in(&basis, &p).unwrap();
        for (r, &s) in basis.states().iter().enumerate() {
            for (c, &t) in basis.states().iter().enumerate() {
                if h[[r, c]].norm() > 0.0 {
                    let inner = |x: u32| (0..2).filter(|&i| basis.occupied(x, mode(i, Chain::Inner))).count();
                    assert_eq!(inner(s), inner(t));
                }
            }
        }
    }

    #[test]
    fn unmeasured_evolution_preserves_norm() {
        let p = LadderParams::new(2, 1.5, 0.9, 1.0);
        let basis = ed_basis(&p).unwrap();
        let mut psi0 = vec![C64::new(0.0, 0.0); basis.dim()];
        psi0[0b1010] = C64::new(1.0, 0.0);
        let steps = ed_reference_evolution(&psi0, &p, &vec![vec![]; 4]).unwrap();
        for s in &steps {
            let n: f64 = s.psi.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
            assert_eq!(s.probability, 1.0);
        }
    }
}
