//! Single atom in a 50-mode lattice: the Householder chain against the
//! Lanczos chain.
//!
//! cargo run --release --example chain_mapping [out_dir]

use std::path::PathBuf;

use bandchain::cli::presets::{fig4_spec, Overrides, Preset};
use bandchain::cli::run_reproduction_suite;
use bandchain::model::assemble_dicke_matrix;
use bandchain::transform::{band_reduce, lanczos_chain_map_oracle, ChainCoefficients};

fn main() -> bandchain::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/chain_mapping".into());
    let dicke = assemble_dicke_matrix(&fig4_spec()?);
    let (band, _) = band_reduce(&dicke);
    let householder = ChainCoefficients::from_band(&band)?;
    let lanczos = lanczos_chain_map_oracle(&dicke)?;

    println!("rho  {:>14.8} {:>14.8}", householder.rho.abs(), lanczos.rho);
    println!("{:>3} {:>14} {:>14} {:>14} {:>14}", "n", "xi (H)", "xi (L)", "|t| (H)", "t (L)");
    for n in (0..lanczos.len()).step_by(7) {
        let t = |c: &ChainCoefficients| c.t.get(n).map_or(f64::NAN, |v| v.abs());
        println!(
            "{:>3} {:>14.8} {:>14.8} {:>14.8} {:>14.8}",
            n + 1,
            householder.xi[n],
            lanczos.xi[n],
            t(&householder),
            t(&lanczos)
        );
    }

    let report = run_reproduction_suite(&Preset::Fig4, &Overrides::default(), &out, true)?;
    print!("{}", report.summary());
    println!("chain.csv and chain.svg written to {}", out.display());
    Ok(())
}
