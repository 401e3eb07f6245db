//! Householder band reduction of the coupling matrix, and the independent
//! checks used to validate it: a Lanczos chain map for the single-atom case
//! and a Jacobi eigensolver for similarity invariance.

mod householder;
mod lanczos;
mod spectrum;

pub use householder::{
    apply_householder_step, band_reduce, householder_vector, validate_band_structure,
    BandReport, HouseholderStep,
};
pub use lanczos::{lanczos_chain_map_oracle, ChainCoefficients};
pub use spectrum::symmetric_spectrum;
