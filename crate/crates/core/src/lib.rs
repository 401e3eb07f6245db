//! Band-coupled simulation of few-atom, multimode Dicke systems.
//!
//! A star-coupled system of `N_a` two-level atoms and `M` bosonic modes is
//! described by a symmetric coupling matrix. [`transform::band_reduce`]
//! applies Householder reflectors that touch only the boson coordinates and
//! leaves a band matrix of bandwidth `N_a`. The resulting band Hamiltonian has
//! only near-neighbour couplings, so it can be evolved with TEBD on a matrix
//! product state ([`mps`]). Small systems can be evolved exactly in the full
//! truncated Fock space ([`exact`]) to cross-check both forms.

pub mod cli;
pub mod error;
pub mod exact;
pub mod initial;
pub mod model;
pub mod mps;
pub mod transform;

pub use error::{Error, Result};
