use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::InitialState;
use crate::model::SystemSpec;
use crate::mps::TruncationPolicy;

/// Where the system comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum SpecSource {
    Inline { spec: SystemSpec },
    File { path: PathBuf },
    /// Random couplings in `[-0.2, 0.2]`, atom frequencies 1 and sorted mode
    /// frequencies in `(0.5, 3)`, drawn from the run seed.
    Random { atom_count: usize, mode_count: usize },
}

impl SpecSource {
    pub fn load(&self, seed: u64) -> Result<SystemSpec> {
        match self {
            SpecSource::Inline { spec } => Ok(spec.clone()),
            SpecSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| Error::Io { path: path.clone(), source })?;
                SystemSpec::from_json(&text)
            }
            SpecSource::Random { atom_count, mode_count } => random_spec(*atom_count, *mode_count, seed),
        }
    }
}

pub fn random_spec(atom_count: usize, mode_count: usize, seed: u64) -> Result<SystemSpec> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut freqs: Vec<f64> = (0..mode_count).map(|_| rng.gen_range(0.5..3.0)).collect();
    freqs.sort_by(f64::total_cmp);
    let g = Array2::from_shape_fn((atom_count, mode_count), |_| rng.gen_range(-0.2..0.2));
    SystemSpec::from_couplings(vec![1.0; atom_count], freqs, g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Transform,
    Exact,
    Mps,
    Compare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianForm {
    Dicke,
    Band,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mps,
}

/// One side of a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubRun {
    pub method: Method,
    pub hamiltonian: HamiltonianForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub left: SubRun,
    pub right: SubRun,
    /// Largest tolerated pointwise deviation of any compared observable.
    pub tolerance: f64,
}

fn default_stride() -> usize {
    1
}

fn default_grid() -> usize {
    121
}

fn default_initial() -> InitialState {
    InitialState::AllExcited
}

fn default_form() -> HamiltonianForm {
    HamiltonianForm::Band
}

/// Run configuration as read from JSON. Optional fields are resolved
/// against the spec by [`RunConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: SpecSource,
    pub mode: Mode,
    #[serde(default = "default_form")]
    pub hamiltonian: HamiltonianForm,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    #[serde(default)]
    pub fock_cutoff: Option<usize>,
    /// Time step; defaults to `2π / (100 ω_max)`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Step count; alternatively give `periods` in units of `2π/ω_a,1`.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub periods: Option<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub truncation: Option<TruncationPolicy>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Positions sampled for the field-correlation map.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fills every default and checks mode-specific requirements.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let spec = self.spec.load(self.seed)?;
        let atom_period = 2.0 * std::f64::consts::PI / spec.atom_frequencies()[0];
        let needs_time = !matches!(self.mode, Mode::Transform);
        let dt = match self.dt {
            Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Config(format!("dt must be positive, got {dt}")))
            }
            Some(dt) => dt,
            None => 2.0 * std::f64::consts::PI / (100.0 * spec.max_mode_frequency().max(spec.atom_frequencies()[0])),
        };
        let steps = match (self.steps, self.periods) {
            (Some(s), _) => s,
            (None, Some(p)) if p > 0.0 && p.is_finite() => (p * atom_period / dt).round() as usize,
            (None, Some(p)) => return Err(Error::Config(format!("periods must be positive, got {p}"))),
            (None, None) if needs_time => {
                return Err(Error::Config("one of `steps` or `periods` is required".into()))
            }
            (None, None) => 0,
        };
        if needs_time && steps == 0 {
            return Err(Error::Config("step count must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        let fock_cutoff = self.fock_cutoff.unwrap_or(4);
        if fock_cutoff < 2 {
            return Err(Error::Config(format!("fock_cutoff must be at least 2, got {fock_cutoff}")));
        }
        let truncation = self.truncation.clone().unwrap_or_default();
        if truncation.chi_max == 0 || !(truncation.cutoff >= 0.0) {
            return Err(Error::Config("truncation needs chi_max ≥ 1 and cutoff ≥ 0".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("grid_points must be at least 2".into()));
        }
        if self.mode == Mode::Compare && self.compare.is_none() {
            return Err(Error::Config("compare mode needs a `compare` section".into()));
        }
        if let Some(c) = &self.compare {
            if !(c.tolerance >= 0.0) {
                return Err(Error::Config("compare tolerance must be nonnegative".into()));
            }
        }
        let config = RunConfig {
            dt: Some(dt),
            steps: Some(steps),
            periods: None,
            fock_cutoff: Some(fock_cutoff),
            truncation: Some(truncation.clone()),
            ..self.clone()
        };
        Ok(ResolvedConfig { config, spec, dt, steps, fock_cutoff, truncation, atom_period })
    }
}

/// A [`RunConfig`] with all defaults expanded and the spec loaded.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    /// Echo of the config with defaults filled in, for the manifest.
    pub config: RunConfig,
    pub spec: SystemSpec,
    pub dt: f64,
    pub steps: usize,
    pub fock_cutoff: usize,
    pub truncation: TruncationPolicy,
    /// `2π/ω_a,1`
    pub atom_period: f64,
}

impl ResolvedConfig {
    pub fn output_dir(&self) -> PathBuf {
        self.config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        serde_json::from_str(
            r#"{"spec": {"source": "random", "atom_count": 2, "mode_count": 3}, "mode": "exact", "periods": 1.0}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_resolve() {
        let r = base().resolve().unwrap();
        let wmax = r.spec.max_mode_frequency();
        assert!((r.dt - 2.0 * std::f64::consts::PI / (100.0 * wmax.max(1.0))).abs() < 1e-15);
        assert_eq!(r.steps, (r.atom_period / r.dt).round() as usize);
        assert_eq!(r.config.steps, Some(r.steps));
        assert_eq!(r.fock_cutoff, 4);
        assert_eq!(r.config.initial, InitialState::AllExcited);
    }

    #[test]
    fn seed_determines_random_spec() {
        let a = random_spec(2, 4, 9).unwrap();
        assert_eq!(a, random_spec(2, 4, 9).unwrap());
        assert_ne!(a, random_spec(2, 4, 10).unwrap());
    }

    #[test]
    fn invalid_fields_rejected() {
        let mut c = base();
        c.dt = Some(-1.0);
        assert!(matches!(c.resolve(), Err(Error::Config(_))));
        let mut c = base();
        c.periods = None;
        assert!(c.resolve().is_err());
        let mut c = base();
        c.mode = Mode::Compare;
        assert!(c.resolve().is_err());
        let mut c = base();
        c.stride = 0;
        assert!(c.resolve().is_err());
    }
}
