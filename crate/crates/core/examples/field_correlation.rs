//! Photon emission of one excited atom at the cavity centre, shown as the
//! field intensity `⟨E⁻(x)E⁺(x)⟩` on a coarse text map.
//!
//! cargo run --release --example field_correlation

use std::f64::consts::PI;

use bandchain::cli::run::grid;
use bandchain::exact::HilbertSpaceLayout;
use bandchain::initial::InitialState;
use bandchain::model::{assemble_dicke_matrix, build_pec_cavity_spec, CouplingNormalization, HarmonicRule};
use bandchain::mps::{build_gate_layers, field_correlation, init_product_mps, tebd_step, TruncationPolicy};
use bandchain::transform::band_reduce;

fn main() -> bandchain::Result<()> {
    let spec = build_pec_cavity_spec(&[0.0], 16, HarmonicRule::Odd, CouplingNormalization::MaxRatio { target: 0.1 })?;
    let (band, record) = band_reduce(&assemble_dicke_matrix(&spec));
    let layout = HilbertSpaceLayout::sites_only(1, 16, 4)?;
    let steps_per_period = 400;
    let schedule = build_gate_layers(&band, &layout, 2.0 * PI / steps_per_period as f64)?;
    let mut mps = init_product_mps(&layout, &InitialState::AllExcited)?;
    let mut policy = TruncationPolicy::default();
    let xs = grid(61);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];

    println!("t/T   x = -L/2 {:>50} x = L/2", "");
    for row in 0..=20 {
        if row > 0 {
            for _ in 0..steps_per_period / 20 {
                tebd_step(&mut mps, &schedule, &mut policy)?;
            }
        }
        let field = field_correlation(&mps, &record, &spec, &xs)?;
        let peak = field.iter().copied().fold(1e-300, f64::max);
        let line: String = field.iter().map(|v| shades[((v / peak) * 9.0).round().clamp(0.0, 9.0) as usize]).collect();
        println!("{:4.2}  |{line}|", row as f64 / 20.0);
    }
    println!("max bond {}, discarded weight {:.2e}", mps.max_bond_dim(), policy.cumulative_discarded);
    Ok(())
}
