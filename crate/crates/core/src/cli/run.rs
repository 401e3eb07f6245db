use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

use super::config::{HamiltonianForm, Method, Mode, ResolvedConfig, SubRun};
use super::output::{emit_csv, emit_matrix_csv, ensure_dir, write_json, Manifest, Trajectory};
use super::plot::{emit_plot, Figure, Heatmap, LinePlot, Series, SeriesStyle};
use crate::error::{Error, Result};
use crate::exact::{build_band_hamiltonian, build_dicke_hamiltonian, evolve, HilbertSpaceLayout, StateVector};
use crate::model::{assemble_dicke_matrix, BandCouplingMatrix, SystemSpec, TransformRecord};
use crate::mps::{
    build_gate_layers, field_correlation_from_boson, init_product_mps, tebd_run, ObservableConfig, ScheduleSummary,
    TruncationPolicy,
};
use crate::transform::{
    band_reduce, lanczos_chain_map_oracle, symmetric_spectrum, validate_band_structure, BandReport, ChainCoefficients,
};

pub const TIME_LABEL: &str = "t/(2π/ω_a,1)";

/// Band-structure and spectrum checks of one reduction.
#[derive(Clone, Debug, Serialize)]
pub struct TransformSummary {
    pub atom_count: usize,
    pub mode_count: usize,
    pub degenerate: bool,
    pub band: BandReport,
    pub spectrum_max_deviation: f64,
    pub orthogonality_residual: f64,
    pub atom_block_deviation: f64,
    pub reflectors: usize,
    pub chain: Option<ChainComparison>,
}

/// Householder chain against the Lanczos chain. Hoppings and `ρ` are
/// compared in magnitude since each reflector fixes a sign.
#[derive(Clone, Debug, Serialize)]
pub struct ChainComparison {
    pub sites: usize,
    pub max_relative_xi: f64,
    pub max_relative_t: f64,
    pub relative_rho: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn relative(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-14 * scale)
}

pub fn compare_chains(householder: &ChainCoefficients, lanczos: &ChainCoefficients, tolerance: f64) -> Result<ChainComparison> {
    if householder.len() < lanczos.len() {
        return Err(Error::DimensionMismatch(format!(
            "Householder chain has {} sites, Lanczos {}",
            householder.len(),
            lanczos.len()
        )));
    }
    let n = lanczos.len();
    let scale = lanczos.xi.iter().chain(lanczos.t.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let max_relative_xi = (0..n).map(|i| relative(householder.xi[i], lanczos.xi[i], scale)).fold(0.0, f64::max);
    let max_relative_t = (0..lanczos.t.len())
        .map(|i| relative(householder.t[i].abs(), lanczos.t[i], scale))
        .fold(0.0, f64::max);
    let relative_rho = relative(householder.rho.abs(), lanczos.rho, lanczos.rho.abs().max(1.0));
    Ok(ChainComparison {
        sites: n,
        max_relative_xi,
        max_relative_t,
        relative_rho,
        tolerance,
        pass: max_relative_xi <= tolerance && max_relative_t <= tolerance && relative_rho <= tolerance,
    })
}

pub struct TransformOutcome {
    pub summary: TransformSummary,
    pub band: BandCouplingMatrix,
    pub record: TransformRecord,
    pub chains: Option<(ChainCoefficients, ChainCoefficients)>,
}

/// Reduces the spec and checks the result.
pub fn transform_spec(spec: &SystemSpec) -> Result<TransformOutcome> {
    let dicke = assemble_dicke_matrix(spec);
    let (band, record) = band_reduce(&dicke);
    let report = validate_band_structure(&band, 1e-12);
    let mut a = symmetric_spectrum(dicke.matrix().view())?;
    let mut b = symmetric_spectrum(band.matrix().view())?;
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let spectrum_max_deviation = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let chains = if spec.atom_count() == 1 {
        let h = ChainCoefficients::from_band(&band)?;
        let l = lanczos_chain_map_oracle(&dicke)?;
        Some((h, l))
    } else {
        None
    };
    let chain = match &chains {
        Some((h, l)) => Some(compare_chains(h, l, 1e-8)?),
        None => None,
    };
    let summary = TransformSummary {
        atom_count: spec.atom_count(),
        mode_count: spec.mode_count(),
        degenerate: record.is_degenerate(),
        band: report,
        spectrum_max_deviation,
        orthogonality_residual: record.orthogonality_residual(),
        atom_block_deviation: record.atom_block_deviation(),
        reflectors: record.reflectors().len(),
        chain,
    };
    Ok(TransformOutcome { summary, band, record, chains })
}

/// Writes the matrices, the transform report, and for one atom the chain
/// comparison table and plot.
pub fn run_transform(resolved: &ResolvedConfig, out: &Path) -> Result<TransformOutcome> {
    let start = Instant::now();
    ensure_dir(out)?;
    let outcome = transform_spec(&resolved.spec)?;
    let dicke = assemble_dicke_matrix(&resolved.spec);
    let mut outputs = vec!["dicke_matrix.csv", "band_matrix.csv", "q_matrix.csv", "transform.json"];
    emit_matrix_csv(&dicke.matrix().to_owned(), &out.join("dicke_matrix.csv"))?;
    emit_matrix_csv(&outcome.band.matrix().to_owned(), &out.join("band_matrix.csv"))?;
    emit_matrix_csv(&outcome.record.q().to_owned(), &out.join("q_matrix.csv"))?;
    write_json(&outcome.summary, &out.join("transform.json"))?;
    if let Some((h, l)) = &outcome.chains {
        let mut table = Trajectory::new(
            ["n", "xi_householder", "xi_lanczos", "t_householder", "t_lanczos"].map(String::from).to_vec(),
        );
        for n in 0..l.len() {
            let t = |c: &ChainCoefficients| c.t.get(n).map(|v| v.abs()).unwrap_or(f64::NAN);
            table.push(vec![(n + 1) as f64, h.xi[n], l.xi[n], t(h), t(l)]);
        }
        emit_csv(&table, &out.join("chain.csv"))?;
        let idx: Vec<f64> = (1..=l.len()).map(|n| n as f64).collect();
        let hop_idx: Vec<f64> = (1..=l.t.len()).map(|n| n as f64).collect();
        let plot = LinePlot {
            title: "chain coefficients".into(),
            x_label: "site n".into(),
            y_label: "ξ_n, |t_n|".into(),
            series: vec![
                Series { name: "ξ Householder".into(), x: idx.clone(), y: h.xi.slice(ndarray::s![..l.len()]).to_vec(), style: SeriesStyle::Markers },
                Series { name: "ξ Lanczos".into(), x: idx, y: l.xi.to_vec(), style: SeriesStyle::Line },
                Series { name: "|t| Householder".into(), x: hop_idx.clone(), y: h.t.iter().take(l.t.len()).map(|v| v.abs()).collect(), style: SeriesStyle::Markers },
                Series { name: "t Lanczos".into(), x: hop_idx, y: l.t.to_vec(), style: SeriesStyle::Line },
            ],
        };
        emit_plot(&Figure::Lines(plot), &out.join("chain.svg"))?;
        outputs.extend(["chain.csv", "chain.svg"]);
    }
    write_manifest(resolved, out, start, outputs, &outcome.summary)?;
    Ok(outcome)
}

pub(crate) fn write_manifest<D: Serialize>(resolved: &ResolvedConfig, out: &Path, start: Instant, mut outputs: Vec<&str>, details: &D) -> Result<()> {
    outputs.push("manifest.json");
    let manifest = Manifest::new(
        &resolved.config,
        start.elapsed().as_secs_f64(),
        outputs.into_iter().map(String::from).collect(),
        details,
    );
    write_json(&manifest, &out.join("manifest.json"))
}

fn band_for(spec: &SystemSpec) -> BandCouplingMatrix {
    band_reduce(&assemble_dicke_matrix(spec)).0
}

/// Exact RK4 trajectory: time, populations, energy, norm and top-level Fock
/// occupancy.
pub fn exact_trajectory(resolved: &ResolvedConfig, form: HamiltonianForm) -> Result<Trajectory> {
    let spec = &resolved.spec;
    let layout = HilbertSpaceLayout::new(spec.atom_count(), spec.mode_count(), resolved.fock_cutoff)?;
    let h = match form {
        HamiltonianForm::Dicke => build_dicke_hamiltonian(spec, &layout)?,
        HamiltonianForm::Band => build_band_hamiltonian(&band_for(spec), &layout)?,
    };
    exact_trajectory_with(&h, resolved)
}

pub fn exact_trajectory_with(h: &crate::exact::SparseHamiltonian, resolved: &ResolvedConfig) -> Result<Trajectory> {
    let layout = h.layout().clone();
    let na = layout.atom_count();
    let psi0 = StateVector::from_initial(&layout, &resolved.config.initial)?;
    let mut columns = vec!["time".to_string(), "time_periods".to_string()];
    columns.extend((1..=na).map(|j| format!("population_{j}")));
    columns.extend(["energy", "norm", "top_fock_occupancy"].map(String::from));
    let mut t = Trajectory::new(columns);
    evolve(h, &psi0, resolved.dt, resolved.steps, resolved.config.stride, |psi| {
        let mut row = vec![psi.time, psi.time / resolved.atom_period];
        for j in 0..na {
            row.push(psi.atomic_population(j)?);
        }
        row.extend([h.expectation(&psi.amplitudes), psi.norm(), psi.top_fock_occupancy()]);
        t.push(row);
        Ok(())
    })?;
    Ok(t)
}

fn population_plot(title: &str, runs: &[(&str, &Trajectory, SeriesStyle)], atoms: usize) -> Result<Figure> {
    let mut series = Vec::new();
    for (name, t, style) in runs {
        let x = t.column("time_periods").unwrap_or_default();
        for j in 1..=atoms {
            let y = t.column(&format!("population_{j}")).ok_or_else(|| Error::DimensionMismatch("missing population".into()))?;
            series.push(Series { name: format!("{name} atom {j}"), x: x.clone(), y, style: *style });
        }
    }
    Ok(Figure::Lines(LinePlot {
        title: title.into(),
        x_label: TIME_LABEL.into(),
        y_label: "⟨σ⁺σ⁻⟩".into(),
        series,
    }))
}

pub fn run_exact(resolved: &ResolvedConfig, out: &Path) -> Result<Trajectory> {
    let start = Instant::now();
    ensure_dir(out)?;
    let t = exact_trajectory(resolved, resolved.config.hamiltonian)?;
    emit_csv(&t, &out.join("trajectory.csv"))?;
    let fig = population_plot("atomic populations", &[("exact", &t, SeriesStyle::Line)], resolved.spec.atom_count())?;
    emit_plot(&fig, &out.join("populations.svg"))?;
    write_manifest(resolved, out, start, vec!["trajectory.csv", "populations.svg"], &serde_json::json!({
        "samples": t.len(),
        "hamiltonian": resolved.config.hamiltonian,
    }))?;
    Ok(t)
}

/// Output of a TEBD run.
pub struct MpsOutcome {
    pub series: Trajectory,
    /// Correlation map: first column time, then one column per position.
    pub correlation: Trajectory,
    pub positions: Vec<f64>,
    pub details: MpsDetails,
}

#[derive(Clone, Debug, Serialize)]
pub struct MpsDetails {
    pub schedule: ScheduleSummary,
    pub truncation: TruncationPolicy,
    pub final_bond_dims: Vec<usize>,
    pub evolution_seconds: f64,
}

pub fn grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| -0.5 + k as f64 / (points - 1) as f64).collect()
}

/// TEBD on the band Hamiltonian with populations, two-atom components (two
/// atoms), entropies across the first atom and across the atom register, and
/// the field-correlation map.
pub fn mps_trajectory<F: FnMut(f64)>(resolved: &ResolvedConfig, mut progress: F) -> Result<MpsOutcome> {
    let spec = &resolved.spec;
    let na = spec.atom_count();
    let layout = HilbertSpaceLayout::sites_only(na, spec.mode_count(), resolved.fock_cutoff)?;
    let (band, record) = band_reduce(&assemble_dicke_matrix(spec));
    let schedule = build_gate_layers(&band, &layout, resolved.dt)?;
    let mps = init_product_mps(&layout, &resolved.config.initial)?;
    let observables = ObservableConfig {
        stride: resolved.config.stride,
        entropy_bonds: vec![0, na - 1],
        two_atom_components: na == 2,
        boson_correlations: true,
    };
    let positions = grid(resolved.config.grid_points);
    let mut columns = vec!["time".to_string(), "time_periods".to_string()];
    columns.extend((1..=na).map(|j| format!("population_{j}")));
    if na == 2 {
        columns.extend(["p_gg", "p_ge", "p_eg", "p_ee"].map(String::from));
    }
    columns.extend(["entropy_1", "entropy_atoms", "norm", "discarded_weight", "max_bond"].map(String::from));
    let mut series = Trajectory::new(columns);
    let mut map_columns = vec!["time".to_string(), "time_periods".to_string()];
    map_columns.extend(positions.iter().map(|x| format!("x={x:.6}")));
    let mut correlation = Trajectory::new(map_columns);
    let mut failure = None;
    let start = Instant::now();
    let period = resolved.atom_period;
    let run = tebd_run(mps, &schedule, resolved.truncation.clone(), resolved.steps, na, &observables, |rec| {
        let mut row = vec![rec.time, rec.time / period];
        row.extend(&rec.populations);
        if let Some(c) = rec.components {
            row.extend(c);
        }
        row.extend(&rec.entropies);
        row.extend([rec.norm, rec.cumulative_discarded, rec.max_bond as f64]);
        series.push(row);
        if let Some(b) = &rec.boson_correlation {
            match field_correlation_from_boson(b, &record, spec, &positions) {
                Ok(field) => {
                    let mut row = vec![rec.time, rec.time / period];
                    row.extend(field);
                    correlation.push(row);
                }
                Err(e) => failure = Some(e),
            }
        }
        progress(rec.time / period);
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let details = MpsDetails {
        schedule: schedule.summary(),
        truncation: run.policy,
        final_bond_dims: run.final_state.bond_dims(),
        evolution_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(MpsOutcome { series, correlation, positions, details })
}

pub fn correlation_heatmap(outcome: &MpsOutcome, title: &str) -> Figure {
    let rows = outcome.correlation.len();
    let cols = outcome.positions.len();
    let values = Array2::from_shape_fn((rows, cols), |(r, c)| outcome.correlation.rows[r][c + 2]);
    let t_end = outcome.correlation.rows.last().map(|r| r[1]).unwrap_or(1.0);
    Figure::Heat(Heatmap {
        title: title.into(),
        x_label: "x/L".into(),
        y_label: TIME_LABEL.into(),
        x_range: (-0.5, 0.5),
        y_range: (0.0, t_end),
        values,
    })
}

fn lines(title: &str, y_label: &str, t: &Trajectory, names: &[(&str, &str)]) -> Figure {
    let x = t.column("time_periods").unwrap_or_default();
    Figure::Lines(LinePlot {
        title: title.into(),
        x_label: TIME_LABEL.into(),
        y_label: y_label.into(),
        series: names
            .iter()
            .filter_map(|(col, name)| {
                t.column(col).map(|y| Series { name: (*name).into(), x: x.clone(), y, style: SeriesStyle::Line })
            })
            .collect(),
    })
}

pub fn write_mps_outputs(outcome: &MpsOutcome, atoms: usize, out: &Path) -> Result<Vec<&'static str>> {
    emit_csv(&outcome.series, &out.join("timeseries.csv"))?;
    emit_csv(&outcome.correlation, &out.join("correlation.csv"))?;
    emit_plot(&population_plot("atomic populations", &[("TEBD", &outcome.series, SeriesStyle::Line)], atoms)?, &out.join("populations.svg"))?;
    emit_plot(&correlation_heatmap(outcome, "⟨E⁻E⁺⟩"), &out.join("correlation.svg"))?;
    emit_plot(
        &lines("entanglement entropy", "S", &outcome.series, &[("entropy_1", "S_1"), ("entropy_atoms", "S_1:N_a")]),
        &out.join("entropy.svg"),
    )?;
    let mut files = vec!["timeseries.csv", "correlation.csv", "populations.svg", "correlation.svg", "entropy.svg"];
    if atoms == 2 {
        emit_plot(
            &lines("two-atom components", "probability", &outcome.series, &[("p_gg", "gg"), ("p_ge", "ge"), ("p_eg", "eg"), ("p_ee", "ee")]),
            &out.join("components.svg"),
        )?;
        files.push("components.svg");
    }
    Ok(files)
}

pub fn run_mps(resolved: &ResolvedConfig, out: &Path, quiet: bool) -> Result<MpsOutcome> {
    let start = Instant::now();
    ensure_dir(out)?;
    let mut next_report = 0.0;
    let outcome = mps_trajectory(resolved, |t| {
        if !quiet && t >= next_report {
            eprintln!("t/T = {t:.3}");
            next_report = t + 0.5;
        }
    })?;
    let files = write_mps_outputs(&outcome, resolved.spec.atom_count(), out)?;
    write_manifest(resolved, out, start, files, &outcome.details)?;
    Ok(outcome)
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableDeviation {
    pub name: String,
    pub max_abs: f64,
    pub rms: f64,
}

/// Deviations between two aligned trajectories.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub samples: usize,
    pub observables: Vec<ObservableDeviation>,
    pub tolerance: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn max_deviation(&self) -> f64 {
        self.observables.iter().map(|o| o.max_abs).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} over {} samples (tolerance {:e})\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.samples,
            self.tolerance
        );
        for o in &self.observables {
            s.push_str(&format!("  {:<16} max {:.3e}  rms {:.3e}\n", o.name, o.max_abs, o.rms));
        }
        s
    }
}

/// Diffs the named columns of two trajectories sampled on the same time grid.
pub fn compare_trajectories(left: &Trajectory, right: &Trajectory, columns: &[String], tolerance: f64) -> Result<ComparisonReport> {
    let (tl, tr) = (
        left.column("time").ok_or_else(|| Error::DimensionMismatch("left run has no time".into()))?,
        right.column("time").ok_or_else(|| Error::DimensionMismatch("right run has no time".into()))?,
    );
    if tl.len() != tr.len() || tl.iter().zip(&tr).any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0)) {
        return Err(Error::DimensionMismatch(format!(
            "time grids differ ({} vs {} samples)",
            tl.len(),
            tr.len()
        )));
    }
    let mut observables = Vec::new();
    for name in columns {
        let (a, b) = match (left.column(name), right.column(name)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::DimensionMismatch(format!("column {name} missing from a run"))),
        };
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
        let max_abs = diffs.iter().copied().fold(0.0, f64::max);
        let rms = if diffs.is_empty() { 0.0 } else { (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt() };
        observables.push(ObservableDeviation { name: name.clone(), max_abs, rms });
    }
    let pass = observables.iter().all(|o| o.max_abs <= tolerance);
    Ok(ComparisonReport { samples: tl.len(), observables, tolerance, pass })
}

fn sub_run(resolved: &ResolvedConfig, side: &SubRun) -> Result<Trajectory> {
    match (side.method, side.hamiltonian) {
        (Method::Exact, form) => exact_trajectory(resolved, form),
        (Method::Mps, HamiltonianForm::Band) => Ok(mps_trajectory(resolved, |_| {})?.series),
        (Method::Mps, HamiltonianForm::Dicke) => {
            Err(Error::Config("TEBD runs on the band Hamiltonian only".into()))
        }
    }
}

pub fn population_columns(atoms: usize) -> Vec<String> {
    (1..=atoms).map(|j| format!("population_{j}")).collect()
}

pub fn run_compare(resolved: &ResolvedConfig, out: &Path) -> Result<ComparisonReport> {
    let start = Instant::now();
    let cmp = resolved
        .config
        .compare
        .as_ref()
        .ok_or_else(|| Error::Config("compare mode needs a `compare` section".into()))?;
    ensure_dir(out)?;
    let left = sub_run(resolved, &cmp.left)?;
    let right = sub_run(resolved, &cmp.right)?;
    let report = compare_trajectories(&left, &right, &population_columns(resolved.spec.atom_count()), cmp.tolerance)?;
    write_comparison(resolved, out, start, &left, &right, &report, (&label(&cmp.left), &label(&cmp.right)))?;
    Ok(report)
}

fn label(side: &SubRun) -> String {
    format!("{:?} {:?}", side.method, side.hamiltonian).to_lowercase()
}

#[allow(clippy::too_many_arguments)]
pub fn write_comparison(
    resolved: &ResolvedConfig,
    out: &Path,
    start: Instant,
    left: &Trajectory,
    right: &Trajectory,
    report: &ComparisonReport,
    names: (&str, &str),
) -> Result<()> {
    emit_csv(left, &out.join("left.csv"))?;
    emit_csv(right, &out.join("right.csv"))?;
    write_json(report, &out.join("report.json"))?;
    let summary = out.join("summary.txt");
    std::fs::write(&summary, report.summary()).map_err(super::output::io_err(&summary))?;
    let fig = population_plot(
        "atomic populations",
        &[(names.0, left, SeriesStyle::Line), (names.1, right, SeriesStyle::Dashed)],
        resolved.spec.atom_count(),
    )?;
    emit_plot(&fig, &out.join("populations.svg"))?;
    write_manifest(resolved, out, start, vec!["left.csv", "right.csv", "report.json", "summary.txt", "populations.svg"], report)
}

/// Outcome of dispatching on the config's mode.
pub enum RunOutcome {
    Transform(Box<TransformOutcome>),
    Exact(Trajectory),
    Mps(Box<MpsOutcome>),
    Compare(ComparisonReport),
}

impl RunOutcome {
    /// Whether the run met its own checks.
    pub fn passed(&self) -> bool {
        match self {
            RunOutcome::Transform(t) => t.summary.band.pass && t.summary.chain.as_ref().is_none_or(|c| c.pass),
            RunOutcome::Compare(r) => r.pass,
            _ => true,
        }
    }
}

pub fn run(resolved: &ResolvedConfig, quiet: bool) -> Result<RunOutcome> {
    let out = resolved.output_dir();
    Ok(match resolved.config.mode {
        Mode::Transform => RunOutcome::Transform(Box::new(run_transform(resolved, &out)?)),
        Mode::Exact => RunOutcome::Exact(run_exact(resolved, &out)?),
        Mode::Mps => RunOutcome::Mps(Box::new(run_mps(resolved, &out, quiet)?)),
        Mode::Compare => RunOutcome::Compare(run_compare(resolved, &out)?),
    })
}
