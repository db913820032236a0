//! Quantum state transfer between two vertices of a graph under the
//! loop-weighted Hamiltonian `H = A + Q (e_u e_u^T + e_v e_v^T)`.
//!
//! The crate computes transfer strength `p(t) = |exp(itH)_{uv}|^2`, readout
//! times and fidelity lower bounds, counts `{u,v}`-avoiding walks exactly, and
//! turns the known fidelity, ratio, mass and readout bounds into pass/fail
//! certificates on concrete instances.
//!
//! The numerical core is generic over [`Scalar`] (`f32`, `f64` and
//! [`DoubleDouble`]); the aliases below fix the scalar for common uses.
//! [`pipeline::solve`] starts in `f64` and switches to double-double when
//! the top eigenpair is too ill-conditioned for double precision.

pub mod certify;
pub mod dd;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod graph;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod search;
pub mod spectral;
pub mod walks;

pub use error::{Error, ErrorKind, Result};
pub use graph::{parse_edge_list, Graph, VertexPair};
pub use scalar::{Precision, Scalar};
pub use dd::DoubleDouble;

pub type SpectralDataF64 = spectral::SpectralData<f64>;
pub type SpectralDataF32 = spectral::SpectralData<f32>;
pub type SpectralDataDd = spectral::SpectralData<DoubleDouble>;
pub type TopPairF64 = spectral::TopPair<f64>;
pub type TopPairDd = spectral::TopPair<DoubleDouble>;
pub type HamiltonianF64 = dynamics::Hamiltonian<f64>;
pub type HamiltonianDd = dynamics::Hamiltonian<DoubleDouble>;
pub type PropagatorF64 = dynamics::Propagator<f64>;
pub type PropagatorDd = dynamics::Propagator<DoubleDouble>;
pub type SolvedF64 = pipeline::Solved<f64>;
pub type SolvedDd = pipeline::Solved<DoubleDouble>;
