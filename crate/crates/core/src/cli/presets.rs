//! Named figure reproductions. Every parameter the physics leaves open
//! (Fock cutoff, time step, truncation, grid) is pinned here.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::config::{CompareConfig, HamiltonianForm, Method, Mode, RunConfig, SpecSource, SubRun};
use super::diagnostics::{column_gap, column_max, column_min, entropy_trend, light_cone, revival};
use super::output::{ensure_dir, write_json};
use super::run::{
    compare_trajectories, exact_trajectory, mps_trajectory, population_columns, run_transform, write_comparison,
    write_manifest, write_mps_outputs,
};
use crate::error::{Error, Result};
use crate::initial::InitialState;
use crate::model::{build_pec_cavity_spec, build_periodic_lattice_spec, CouplingNormalization, HarmonicRule, SystemSpec};
use crate::mps::TruncationPolicy;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Preset {
    Fig4,
    Fig5,
    Fig7(InitialState),
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig4" => Preset::Fig4,
            "fig5" => Preset::Fig5,
            "fig7-psi1" => Preset::Fig7(InitialState::Psi1),
            "fig7-psi2" => Preset::Fig7(InitialState::Psi2),
            "fig7-psi3" => Preset::Fig7(InitialState::Psi3),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other}; expected one of fig4, fig5, fig7-psi1, fig7-psi2, fig7-psi3"
                )))
            }
        })
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig7(InitialState::Psi1) => "fig7-psi1",
            Preset::Fig7(InitialState::Psi2) => "fig7-psi2",
            Preset::Fig7(_) => "fig7-psi3",
        }
    }
}

/// Single atom, `M = 50`, `ω_k = k`, `g_k = √ω_k`.
pub fn fig4_spec() -> Result<SystemSpec> {
    build_periodic_lattice_spec(50, 1.0)
}

/// Three atoms at `0, L/4, -3L/8`, five modes, `g_{1,1}/ω_1 = 0.25`.
pub fn fig5_spec() -> Result<SystemSpec> {
    build_pec_cavity_spec(
        &[0.0, 0.25, -0.375],
        5,
        HarmonicRule::All,
        CouplingNormalization::AnchorPair { atom: 0, mode: 0, target: 0.25 },
    )
}

/// Two atoms at `±L/4`, thirty odd harmonics, largest `g/ω` equal to 0.1.
pub fn fig7_spec() -> Result<SystemSpec> {
    build_pec_cavity_spec(&[-0.25, 0.25], 30, HarmonicRule::Odd, CouplingNormalization::MaxRatio { target: 0.1 })
}

pub const FIG5_FOCK_CUTOFF: usize = 6;
pub const FIG5_STEPS_PER_PERIOD: usize = 1000;
pub const FIG5_PERIODS: f64 = 3.0;
pub const FIG5_TOLERANCE: f64 = 1e-6;
pub const FIG7_FOCK_CUTOFF: usize = 8;
pub const FIG7_STEPS_PER_PERIOD: usize = 600;
/// Samples per period in the recorded series.
pub const FIG7_SAMPLES_PER_PERIOD: usize = 100;
pub const FIG7_PERIODS: f64 = 5.0;
pub const FIG7_GRID: usize = 121;
pub const CHAIN_TOLERANCE: f64 = 1e-8;
/// Top-level Fock occupancy above which a run is flagged as cutoff-limited.
pub const TOP_FOCK_WARNING: f64 = 1e-4;

/// Command-line overrides applied on top of a preset or config.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Overrides {
    pub fock_cutoff: Option<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub chi_max: Option<usize>,
    pub cutoff: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(nf) = self.fock_cutoff {
            config.fock_cutoff = Some(nf);
        }
        if let Some(dt) = self.dt {
            // keep the simulated span when only dt changes
            if self.steps.is_none() {
                if let (Some(steps), Some(old)) = (config.steps, config.dt) {
                    config.steps = Some(((steps as f64) * old / dt).round() as usize);
                }
            }
            config.dt = Some(dt);
        }
        if let Some(steps) = self.steps {
            config.steps = Some(steps);
            config.periods = None;
        }
        if self.chi_max.is_some() || self.cutoff.is_some() {
            let mut t = config.truncation.clone().unwrap_or_default();
            t.chi_max = self.chi_max.unwrap_or(t.chi_max);
            t.cutoff = self.cutoff.unwrap_or(t.cutoff);
            config.truncation = Some(t);
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.output_dir {
            config.output_dir = Some(out.clone());
        }
    }
}

fn base(spec: SystemSpec, mode: Mode) -> RunConfig {
    RunConfig {
        spec: SpecSource::Inline { spec },
        mode,
        hamiltonian: HamiltonianForm::Band,
        initial: InitialState::AllExcited,
        fock_cutoff: None,
        dt: None,
        steps: None,
        periods: None,
        stride: 1,
        truncation: None,
        output_dir: None,
        seed: 0,
        grid_points: FIG7_GRID,
        compare: None,
    }
}

/// The run configuration behind a preset, before overrides.
pub fn preset_config(preset: &Preset) -> Result<RunConfig> {
    Ok(match preset {
        Preset::Fig4 => base(fig4_spec()?, Mode::Transform),
        Preset::Fig5 => {
            let dt = 2.0 * PI / FIG5_STEPS_PER_PERIOD as f64;
            RunConfig {
                fock_cutoff: Some(FIG5_FOCK_CUTOFF),
                dt: Some(dt),
                steps: Some((FIG5_PERIODS * FIG5_STEPS_PER_PERIOD as f64) as usize),
                stride: FIG5_STEPS_PER_PERIOD / 100,
                compare: Some(CompareConfig {
                    left: SubRun { method: Method::Exact, hamiltonian: HamiltonianForm::Dicke },
                    right: SubRun { method: Method::Exact, hamiltonian: HamiltonianForm::Band },
                    tolerance: FIG5_TOLERANCE,
                }),
                ..base(fig5_spec()?, Mode::Compare)
            }
        }
        Preset::Fig7(initial) => RunConfig {
            initial: initial.clone(),
            fock_cutoff: Some(FIG7_FOCK_CUTOFF),
            dt: Some(2.0 * PI / FIG7_STEPS_PER_PERIOD as f64),
            steps: Some((FIG7_PERIODS * FIG7_STEPS_PER_PERIOD as f64) as usize),
            stride: FIG7_STEPS_PER_PERIOD / FIG7_SAMPLES_PER_PERIOD,
            truncation: Some(TruncationPolicy::default()),
            ..base(fig7_spec()?, Mode::Mps)
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value >= threshold }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReproReport {
    pub preset: String,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub pass: bool,
    pub wall_time_seconds: f64,
}

impl ReproReport {
    pub fn summary(&self) -> String {
        let mut s = format!("{} {}\n", self.preset, if self.pass { "PASS" } else { "FAIL" });
        for c in &self.checks {
            s.push_str(&format!(
                "  [{}] {:<28} {:.6e} (threshold {:.3e})\n",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            ));
        }
        for w in &self.warnings {
            s.push_str(&format!("  warning: {w}\n"));
        }
        s
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Distance moved by light in time `t`: one cavity length per half atomic
/// period, i.e. `c = 1/π` in units where `L = 1` and `ω_a = 1`.
pub const LIGHT_SPEED: f64 = 1.0 / PI;

/// Runs a preset end to end and writes its outputs, `report.json` and
/// `summary.txt` under `out`.
pub fn run_reproduction_suite(preset: &Preset, overrides: &Overrides, out: &Path, quiet: bool) -> Result<ReproReport> {
    let start = Instant::now();
    let mut config = preset_config(preset)?;
    overrides.apply(&mut config);
    config.output_dir = Some(out.to_path_buf());
    let resolved = config.resolve()?;
    ensure_dir(out)?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    match preset {
        Preset::Fig4 => {
            let outcome = run_transform(&resolved, out)?;
            let chain = outcome.summary.chain.as_ref().ok_or_else(|| Error::Config("fig4 needs one atom".into()))?;
            checks.push(Check::at_most("xi relative deviation", chain.max_relative_xi, CHAIN_TOLERANCE));
            checks.push(Check::at_most("t relative deviation", chain.max_relative_t, CHAIN_TOLERANCE));
            checks.push(Check::at_most("rho relative deviation", chain.relative_rho, CHAIN_TOLERANCE));
            checks.push(Check::at_most("spectrum deviation", outcome.summary.spectrum_max_deviation, 1e-10));
        }
        Preset::Fig5 => {
            let cmp = resolved.config.compare.clone().expect("fig5 compares");
            let left = exact_trajectory(&resolved, HamiltonianForm::Dicke)?;
            let right = exact_trajectory(&resolved, HamiltonianForm::Band)?;
            let report = compare_trajectories(&left, &right, &population_columns(3), cmp.tolerance)?;
            write_comparison(&resolved, out, start, &left, &right, &report, ("Dicke", "band"))?;
            checks.push(Check::at_most("population deviation", report.max_deviation(), cmp.tolerance));
            for (name, t) in [("Dicke", &left), ("band", &right)] {
                let top = column_max(t, "top_fock_occupancy")?;
                if top > TOP_FOCK_WARNING {
                    warnings.push(format!("{name} run: top Fock occupancy {top:.3e} exceeds {TOP_FOCK_WARNING:e}"));
                }
            }
        }
        Preset::Fig7(initial) => {
            let mut next = 0.0;
            let outcome = mps_trajectory(&resolved, |t| {
                if !quiet && t >= next {
                    eprintln!("{} t/T = {t:.2}", preset.name());
                    next = t + 0.25;
                }
            })?;
            let mut files = write_mps_outputs(&outcome, 2, out)?;
            files.extend(["mps.json", "report.json", "summary.txt"]);
            let series = &outcome.series;
            checks.push(Check::at_most("population symmetry", column_gap(series, "population_1", "population_2")?, 1e-6));
            checks.push(Check::at_most("max S_1", column_max(series, "entropy_1")?, 2f64.ln() + 1e-9));
            if *initial == InitialState::Psi3 {
                for name in ["entropy_1", "entropy_atoms"] {
                    let trend = entropy_trend(series, name)?;
                    checks.push(Check::at_most(&format!("{name} initial"), trend.initial.abs(), 1e-12));
                    checks.push(Check::at_least(&format!("{name} minimum"), trend.minimum, -1e-12));
                    let drops = trend.block_means.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
                    checks.push(Check::at_most(&format!("{name} period-mean drop"), drops, 0.0));
                }
            }
            if *initial == InitialState::Psi2 {
                checks.push(Check::at_least("ge+eg revival near t=5", revival(series, 5.0, 0.25)?, 0.8));
            }
            let map: Vec<Vec<f64>> = outcome.correlation.rows.iter().map(|r| r[2..].to_vec()).collect();
            let times: Vec<f64> = outcome.correlation.rows.iter().map(|r| r[0]).collect();
            let peak = map.iter().flatten().copied().fold(0.0, f64::max);
            let floor = map.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            checks.push(Check::at_least("correlation min / max", floor / peak, -1e-9));
            let atoms = resolved.spec.atom_positions().to_vec();
            let slack = 2.0 / resolved.spec.max_mode_frequency();
            let cone = light_cone(&times, &outcome.positions, &map, &atoms, LIGHT_SPEED, slack, 0.1, resolved.atom_period / 8.0);
            checks.push(Check::at_most("light-cone excess", cone.max_excess, 0.0));
            checks.push(Check::at_most("discarded weight", outcome.details.truncation.cumulative_discarded, 1e-3));
            let norm_gap = column_max(series, "norm")? - column_min(series, "norm")?;
            checks.push(Check::at_most("norm variation", norm_gap, 1e-3));
            write_json(&serde_json::json!({"mps": outcome.details, "light_cone": cone}), &out.join("mps.json"))?;
            write_manifest(&resolved, out, start, files, &outcome.details)?;
        }
    }
    let report = ReproReport {
        preset: preset.name().into(),
        pass: checks.iter().all(|c| c.pass),
        checks,
        warnings,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&report, &out.join("report.json"))?;
    let summary = out.join("summary.txt");
    std::fs::write(&summary, report.summary()).map_err(super::output::io_err(&summary))?;
    Ok(report)
}
