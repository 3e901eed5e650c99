//! Simulation engine for monitored free-fermion ladders.
//!
//! Two periodic chains of spinless fermions are coupled rung by rung. The
//! inner chain is the system of interest; the outer chain is a bath whose
//! sites are projectively measured at the end of every stroboscopic period.
//! Because both the hopping dynamics and the occupation measurements keep a
//! particle-conserving Gaussian state Gaussian, a trajectory is carried by its
//! `2L x 2L` correlation matrix `D[(i,s),(j,s')] = <c+_{i,s} c_{j,s'}>`.
//!
//! # Mode layout
//!
//! Every module addresses single-particle modes with the same convention,
//! defined once in [`lattice::mode`]: rows and columns are ordered by site
//! first and chain second, the chain index being the fastest axis:
//!
//! ```text
//! mode(site, chain) = 2 * site + chain,   chain 0 = inner, chain 1 = outer
//! ```
//!
//! The Fock-space code in [`nonmarkov`] uses the same ordering for its
//! occupation strings and Jordan-Wigner signs.

extern crate blas_src;

pub mod analysis;
pub mod engine;
pub mod entanglement;
mod error;
pub mod gaussian;
pub mod lattice;
pub mod linalg;
pub mod nonmarkov;
pub mod parallel;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = ndarray::Array2<C64>;
