//! Matrix product states and second-order TEBD for the band Hamiltonian.

mod gates;
mod linalg;
mod mpo;
mod observables;
mod state;
mod tebd;

pub use gates::{
    build_gate_layers, exponentiate_gate, gate_generators, GateGenerator, GateKind, ScheduleSummary,
    TrotterGate, TrotterSchedule, DENSE_GATE_CAP,
};
pub use linalg::{block_decompose, block_svd, hermitian_exp, BlockMatrix};
pub use mpo::{boson_gate_bond_bound, decompose_gate_to_mpo, dimension_bond_bound, GateMPO};
pub use observables::{
    atomic_populations, boson_correlation_matrix, entanglement_entropy, entropy_of, field_correlation,
    field_correlation_from_boson, schmidt_values, two_site_rdm, Environments,
};
pub use state::{init_product_mps, Mps};
pub use tebd::{
    apply_mpo_and_truncate, tebd_run, tebd_step, ObservableConfig, TebdRecord, TebdTrajectory,
    TruncationPolicy,
};
