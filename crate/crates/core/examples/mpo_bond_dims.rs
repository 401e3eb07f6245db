//! Bond dimensions of Trotter gates written as MPOs.
//!
//! cargo run --release --example mpo_bond_dims

use bandchain::cli::random_spec;
use bandchain::exact::HilbertSpaceLayout;
use bandchain::model::assemble_dicke_matrix;
use bandchain::mps::{boson_gate_bond_bound, build_gate_layers, decompose_gate_to_mpo, exponentiate_gate, gate_generators, GateKind};
use bandchain::transform::band_reduce;

fn main() -> bandchain::Result<()> {
    for (na, nf) in [(1, 6), (2, 8), (3, 4)] {
        let band = band_reduce(&assemble_dicke_matrix(&random_spec(na, 6, 1)?)).0;
        let layout = HilbertSpaceLayout::sites_only(na, 6, nf)?;
        let schedule = build_gate_layers(&band, &layout, 0.05)?;
        println!("N_a = {na}, N_f = {nf}: bound N_f^{} = {}", if na % 2 == 0 { na } else { na + 1 }, boson_gate_bond_bound(nf, na));
        for gate in schedule.gates().take(na + 2) {
            println!("  {:?} on sites {}..={}: MPO bonds {:?}", gate.kind, gate.start, gate.end(), gate.mpo.bond_dims());
        }
    }

    // four boson sites with N_f = 8: the 4096-dimensional gate
    let band = band_reduce(&assemble_dicke_matrix(&random_spec(3, 5, 2)?)).0;
    let generator = gate_generators(&band, 8)
        .into_iter()
        .find(|g| matches!(g.kind, GateKind::Boson(0)))
        .expect("boson gate");
    let unitary = exponentiate_gate(&generator.matrix()?, 0.05)?;
    let mpo = decompose_gate_to_mpo(&unitary, generator.start, &generator.dims)?;
    println!(
        "N_a = 3, N_f = 8 boson gate of dimension {}: MPO bonds {:?} (bound {})",
        generator.dimension(),
        mpo.bond_dims(),
        boson_gate_bond_bound(8, 3)
    );
    Ok(())
}
