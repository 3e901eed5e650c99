//! Non-Markovianity of the reduced inner-chain dynamics.
//!
//! Two routes are provided. The exact route evolves full-ladder density
//! matrices under the trajectory-averaged channel and measures trace
//! distances of the reduced states ([`blp`]). The Gaussian route averages
//! correlation-matrix trajectories and evaluates the quadratic trace distance
//! through Gaussian product traces ([`quadratic`]). The Fock-space code in
//! [`fock`] and [`ed`] doubles as the oracle for the Gaussian conventions.

pub mod blp;
pub mod channel;
pub mod ed;
pub mod fock;
pub mod quadratic;
pub mod sampling;

pub use blp::{blp_measure, normalized_blp_measure, BlpResult, PairSeries};
pub use channel::{averaged_channel_step, trace_distance, AveragedChannel, DensityMatrix};
pub use ed::{build_fock_hamiltonian, ed_reference_evolution, EdStep};
pub use quadratic::{
    gaussian_product_trace, n_measure_quadratic, quadratic_distance_series, quadratic_measure, DistanceSeries,
    GaussianEnsemble, QuadraticResult,
};
pub use sampling::{sample_initial_pair, InitialPair, InitialState, PairMode};
