//! Full truncated-Fock-space Hamiltonians and RK4 time evolution.
//!
//! This is the reference path: it handles both the star and band forms and is
//! used to validate the equivalence of the two and the TEBD evolution.

mod evolve;
mod hamiltonian;
mod layout;
mod operators;

pub use evolve::{evolve, evolve_trajectory, StateVector, NORM_DRIFT_TOLERANCE};
pub(crate) use hamiltonian::band_terms;
pub use hamiltonian::{
    build_band_hamiltonian, build_dicke_hamiltonian, CsrMatrix, SparseHamiltonian, Term,
};
pub use layout::{HilbertSpaceLayout, DEFAULT_DIMENSION_CAP};
pub use operators::{hermitian_residual, kron, LocalOperatorSet};
