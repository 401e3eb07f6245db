use std::path::Path;
use std::process::Command;

use bandchain::cli::run::{exact_trajectory, exact_trajectory_with, population_columns, run_transform};
use bandchain::cli::{compare_trajectories, random_spec, read_csv, run, HamiltonianForm, RunConfig, RunOutcome, SpecSource};
use bandchain::exact::{build_band_hamiltonian, HilbertSpaceLayout};
use bandchain::model::assemble_dicke_matrix;
use bandchain::transform::band_reduce;

fn config(json: &str) -> RunConfig {
    serde_json::from_str(json).unwrap()
}

fn small(mode: &str, out: &Path) -> RunConfig {
    let mut c = config(&format!(
        r#"{{"spec": {{"source": "random", "atom_count": 2, "mode_count": 3}}, "mode": "{mode}",
            "fock_cutoff": 5, "periods": 1.0, "dt": 0.01, "stride": 10, "seed": 3}}"#
    ));
    c.output_dir = Some(out.to_path_buf());
    c
}

#[test]
fn self_comparison_has_zero_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let r = small("exact", dir.path()).resolve().unwrap();
    let a = exact_trajectory(&r, HamiltonianForm::Band).unwrap();
    let b = exact_trajectory(&r, HamiltonianForm::Band).unwrap();
    let report = compare_trajectories(&a, &b, &population_columns(2), 0.0).unwrap();
    assert!(report.pass);
    assert_eq!(report.max_deviation(), 0.0);
}

#[test]
fn planted_rho_defect_fails_comparison() {
    let dir = tempfile::tempdir().unwrap();
    // weak coupling keeps the Fock-cutoff mismatch between the two forms small
    let spec = random_spec(2, 3, 3).unwrap();
    let spec = spec.with_coupling(spec.coupling().mapv(|g| 0.25 * g)).unwrap();
    let mut c = small("exact", dir.path());
    c.spec = SpecSource::Inline { spec };
    let r = c.resolve().unwrap();
    let dicke = exact_trajectory(&r, HamiltonianForm::Dicke).unwrap();
    let band = exact_trajectory(&r, HamiltonianForm::Band).unwrap();
    let tolerance = 1e-5;
    let clean = compare_trajectories(&dicke, &band, &population_columns(2), tolerance).unwrap();
    assert!(clean.pass, "{}", clean.summary());

    let (mut corrupted, _) = band_reduce(&assemble_dicke_matrix(&r.spec));
    let na = corrupted.atom_count();
    corrupted.matrix_mut()[[1, na]] *= 1.1;
    corrupted.matrix_mut()[[na, 1]] *= 1.1;
    let layout = HilbertSpaceLayout::new(2, 3, r.fock_cutoff).unwrap();
    let h = build_band_hamiltonian(&corrupted, &layout).unwrap();
    let defect = exact_trajectory_with(&h, &r).unwrap();
    let report = compare_trajectories(&dicke, &defect, &population_columns(2), tolerance).unwrap();
    assert!(!report.pass, "{}", report.summary());
    assert!(report.max_deviation() > 10.0 * clean.max_deviation(), "{} {}", clean.summary(), report.summary());
}

#[test]
fn mismatched_grids_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let r = small("exact", dir.path()).resolve().unwrap();
    let a = exact_trajectory(&r, HamiltonianForm::Band).unwrap();
    let mut c = small("exact", dir.path());
    c.stride = 5;
    let b = exact_trajectory(&c.resolve().unwrap(), HamiltonianForm::Band).unwrap();
    assert!(compare_trajectories(&a, &b, &population_columns(2), 1.0).is_err());
}

#[test]
fn exact_run_writes_csv_plot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let r = small("exact", dir.path()).resolve().unwrap();
    let outcome = run(&r, true).unwrap();
    assert!(outcome.passed());
    let t = read_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        t.columns,
        ["time", "time_periods", "population_1", "population_2", "energy", "norm", "top_fock_occupancy"]
    );
    let energy = t.column("energy").unwrap();
    assert!(energy.iter().all(|e| (e - energy[0]).abs() < 1e-6));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["fock_cutoff"], 5);
    assert!(manifest["config"]["steps"].as_u64().unwrap() > 0);
    assert!(std::fs::read_to_string(dir.path().join("populations.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&small("mps", a.path()).resolve().unwrap(), true).unwrap();
    run(&small("mps", b.path()).resolve().unwrap(), true).unwrap();
    for file in ["timeseries.csv", "correlation.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap());
    }
}

#[test]
fn mps_run_tracks_exact_populations() {
    let dir = tempfile::tempdir().unwrap();
    let r = small("mps", dir.path()).resolve().unwrap();
    let RunOutcome::Mps(mps) = run(&r, true).unwrap() else { panic!("mps outcome") };
    let exact = exact_trajectory(&r, HamiltonianForm::Band).unwrap();
    let report = compare_trajectories(&exact, &mps.series, &population_columns(2), 1e-3).unwrap();
    assert!(report.pass, "{}", report.summary());
    assert_eq!(mps.correlation.len(), mps.series.len());
    let map = read_csv(&dir.path().join("correlation.csv")).unwrap();
    assert_eq!(map.columns.len(), 2 + r.config.grid_points);
}

#[test]
fn transform_run_reports_band_and_chain() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(r#"{"spec": {"source": "random", "atom_count": 1, "mode_count": 8}, "mode": "transform"}"#);
    c.output_dir = Some(dir.path().to_path_buf());
    let outcome = run_transform(&c.resolve().unwrap(), dir.path()).unwrap();
    assert!(outcome.summary.band.pass);
    assert!(outcome.summary.chain.as_ref().unwrap().pass);
    for file in ["dicke_matrix.csv", "band_matrix.csv", "q_matrix.csv", "transform.json", "chain.csv", "chain.svg"] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
}

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bandchain")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let good = write_config(
        dir.path(),
        r#"{"spec": {"source": "random", "atom_count": 2, "mode_count": 3}, "mode": "compare",
            "fock_cutoff": 4, "periods": 0.5, "dt": 0.02, "stride": 5,
            "compare": {"left": {"method": "exact", "hamiltonian": "band"},
                        "right": {"method": "exact", "hamiltonian": "band"}, "tolerance": 0.0}}"#,
    );
    let o = bin(&["compare", "--config", good.to_str().unwrap(), "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(Path::new(out).join("report.json").exists());

    let strict = write_config(
        dir.path(),
        r#"{"spec": {"source": "random", "atom_count": 2, "mode_count": 3}, "mode": "compare",
            "fock_cutoff": 4, "periods": 0.5, "dt": 0.02,
            "compare": {"left": {"method": "exact", "hamiltonian": "dicke"},
                        "right": {"method": "exact", "hamiltonian": "band"}, "tolerance": 1e-15}}"#,
    );
    let o = bin(&["compare", "--config", strict.to_str().unwrap(), "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = write_config(dir.path(), r#"{"spec": {"source": "random", "atom_count": 1, "mode_count": 2}, "mode": "exact"}"#);
    assert_eq!(bin(&["exact", "--config", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    assert_eq!(bin(&["exact", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(bin(&["repro", "fig6", "--out", out]).status.code(), Some(2));

    let huge = write_config(
        dir.path(),
        r#"{"spec": {"source": "random", "atom_count": 2, "mode_count": 12}, "mode": "exact", "steps": 1}"#,
    );
    let o = bin(&["exact", "--config", huge.to_str().unwrap(), "--nf", "8", "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds cap"));
}

#[test]
fn cli_repro_fig4() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["repro", "fig4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fig4 PASS"));
    assert!(dir.path().join("chain.svg").exists());
}
