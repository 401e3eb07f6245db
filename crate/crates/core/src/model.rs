//! System definitions and the two coupling-matrix forms.
//!
//! All quantities are in normalized units: the first atomic frequency is 1,
//! ħ = 1 and the cavity occupies `x ∈ [-1/2, 1/2]`.
//!
//! The Dicke coupling matrix is laid out as
//!
//! ```text
//!  ┌ diag(ω_a)   g        ┐   N_a rows
//!  └ gᵀ          diag(ω_f) ┘   M rows
//! ```
//!
//! and the band coupling matrix produced by [`crate::transform::band_reduce`]
//! keeps the atom block and confines everything else to bandwidth `N_a`.

use std::f64::consts::PI;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which cavity harmonics the modes correspond to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicRule {
    /// Harmonics `n = 1, 2, …, M`.
    All,
    /// Harmonics `n = 1, 3, 5, …, 2M-1`.
    Odd,
}

impl HarmonicRule {
    pub fn harmonic(self, k: usize) -> u32 {
        match self {
            HarmonicRule::All => (k + 1) as u32,
            HarmonicRule::Odd => (2 * k + 1) as u32,
        }
    }
}

/// How the overall coupling prefactor `g₀` is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingNormalization {
    /// Use `g₀` as given.
    Scale { g0: f64 },
    /// Choose `g₀` so that `g[atom, mode] / ω_mode == target`.
    AnchorPair { atom: usize, mode: usize, target: f64 },
    /// Choose `g₀` so that `max |g[j, k] / ω_k| == target`.
    MaxRatio { target: f64 },
}

/// Provenance of the coupling matrix. Kept alongside the numbers so that
/// field profiles can be reconstructed later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    PeriodicLattice {
        coupling_scale: f64,
    },
    PecCavity {
        harmonic_rule: HarmonicRule,
        normalization: CouplingNormalization,
        /// Resolved prefactor.
        g0: f64,
    },
    Manual,
}

/// Standing-wave profile of harmonic `n` in a cavity with walls at ±1/2.
pub fn pec_mode_profile(n: u32, x: f64) -> f64 {
    (n as f64 * PI * (x + 0.5)).sin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct AtomsDoc {
    frequencies: Vec<f64>,
    #[serde(default)]
    positions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ModesDoc {
    frequencies: Vec<f64>,
    #[serde(default)]
    harmonics: Vec<u32>,
}

/// On-disk JSON shape of a [`SystemSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SpecDoc {
    atoms: AtomsDoc,
    modes: ModesDoc,
    coupling: Vec<Vec<f64>>,
    #[serde(default = "manual")]
    generator: Generator,
}

fn manual() -> Generator {
    Generator::Manual
}

/// An experiment definition: atoms, modes and the dense atom-mode couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct SystemSpec {
    atom_frequencies: Array1<f64>,
    atom_positions: Array1<f64>,
    mode_frequencies: Array1<f64>,
    mode_harmonics: Vec<u32>,
    coupling: Array2<f64>,
    generator: Generator,
}

impl TryFrom<SpecDoc> for SystemSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        let n_atoms = doc.atoms.frequencies.len();
        let n_modes = doc.modes.frequencies.len();
        if doc.coupling.len() != n_atoms || doc.coupling.iter().any(|row| row.len() != n_modes) {
            return Err(Error::InvalidSpec(format!(
                "coupling must be {n_atoms}x{n_modes}"
            )));
        }
        let flat: Vec<f64> = doc.coupling.into_iter().flatten().collect();
        let coupling = Array2::from_shape_vec((n_atoms, n_modes), flat)
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let positions = if doc.atoms.positions.is_empty() {
            vec![0.0; n_atoms]
        } else {
            doc.atoms.positions
        };
        let harmonics = if doc.modes.harmonics.is_empty() {
            (1..=n_modes as u32).collect()
        } else {
            doc.modes.harmonics
        };
        SystemSpec::new(
            Array1::from(doc.atoms.frequencies),
            Array1::from(positions),
            Array1::from(doc.modes.frequencies),
            harmonics,
            coupling,
            doc.generator,
        )
    }
}

impl From<SystemSpec> for SpecDoc {
    fn from(spec: SystemSpec) -> Self {
        SpecDoc {
            atoms: AtomsDoc {
                frequencies: spec.atom_frequencies.to_vec(),
                positions: spec.atom_positions.to_vec(),
            },
            modes: ModesDoc {
                frequencies: spec.mode_frequencies.to_vec(),
                harmonics: spec.mode_harmonics,
            },
            coupling: spec.coupling.outer_iter().map(|r| r.to_vec()).collect(),
            generator: spec.generator,
        }
    }
}

impl SystemSpec {
    /// Builds and validates a spec.
    pub fn new(
        atom_frequencies: Array1<f64>,
        atom_positions: Array1<f64>,
        mode_frequencies: Array1<f64>,
        mode_harmonics: Vec<u32>,
        coupling: Array2<f64>,
        generator: Generator,
    ) -> Result<Self> {
        let n_atoms = atom_frequencies.len();
        let n_modes = mode_frequencies.len();
        if n_atoms == 0 {
            return Err(Error::InvalidSpec("at least one atom is required".into()));
        }
        if n_modes == 0 {
            return Err(Error::InvalidSpec("at least one mode is required".into()));
        }
        if atom_positions.len() != n_atoms {
            return Err(Error::InvalidSpec("one position per atom".into()));
        }
        if mode_harmonics.len() != n_modes {
            return Err(Error::InvalidSpec("one harmonic index per mode".into()));
        }
        if coupling.dim() != (n_atoms, n_modes) {
            return Err(Error::InvalidSpec(format!(
                "coupling has shape {:?}, expected ({n_atoms}, {n_modes})",
                coupling.dim()
            )));
        }
        for (name, freqs) in [("atom", &atom_frequencies), ("mode", &mode_frequencies)] {
            if let Some(w) = freqs.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::InvalidSpec(format!(
                    "{name} frequency {w} must be finite and positive"
                )));
            }
        }
        if mode_frequencies.windows(2).into_iter().any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("mode frequencies must be strictly increasing".into()));
        }
        if coupling.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidSpec("coupling entries must be finite".into()));
        }
        if atom_positions.iter().any(|x| !(-0.5..=0.5).contains(x)) {
            return Err(Error::InvalidSpec("atom positions must lie in [-1/2, 1/2]".into()));
        }
        Ok(SystemSpec {
            atom_frequencies,
            atom_positions,
            mode_frequencies,
            mode_harmonics,
            coupling,
            generator,
        })
    }

    /// Spec with explicit couplings and no positional information.
    pub fn from_couplings(
        atom_frequencies: Vec<f64>,
        mode_frequencies: Vec<f64>,
        coupling: Array2<f64>,
    ) -> Result<Self> {
        let n_atoms = atom_frequencies.len();
        let n_modes = mode_frequencies.len();
        SystemSpec::new(
            Array1::from(atom_frequencies),
            Array1::zeros(n_atoms),
            Array1::from(mode_frequencies),
            (1..=n_modes as u32).collect(),
            coupling,
            Generator::Manual,
        )
    }

    pub fn atom_count(&self) -> usize {
        self.atom_frequencies.len()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_frequencies.len()
    }

    pub fn atom_frequencies(&self) -> ArrayView1<'_, f64> {
        self.atom_frequencies.view()
    }

    pub fn atom_positions(&self) -> ArrayView1<'_, f64> {
        self.atom_positions.view()
    }

    pub fn mode_frequencies(&self) -> ArrayView1<'_, f64> {
        self.mode_frequencies.view()
    }

    pub fn mode_harmonics(&self) -> &[u32] {
        &self.mode_harmonics
    }

    /// `N_a × M` atom-mode couplings.
    pub fn coupling(&self) -> ArrayView2<'_, f64> {
        self.coupling.view()
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// Largest mode frequency.
    pub fn max_mode_frequency(&self) -> f64 {
        self.mode_frequencies[self.mode_count() - 1]
    }

    /// Copy with one coupling entry replaced; used for planted-defect checks.
    pub fn with_coupling(&self, coupling: Array2<f64>) -> Result<Self> {
        SystemSpec::new(
            self.atom_frequencies.clone(),
            self.atom_positions.clone(),
            self.mode_frequencies.clone(),
            self.mode_harmonics.clone(),
            coupling,
            Generator::Manual,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Single atom in a periodic lattice: `ω_k = k`, `g_k = g·√ω_k`.
pub fn build_periodic_lattice_spec(mode_count: usize, coupling_scale: f64) -> Result<SystemSpec> {
    if mode_count < 1 {
        return Err(Error::InvalidSpec("mode_count must be at least 1".into()));
    }
    if !coupling_scale.is_finite() {
        return Err(Error::InvalidSpec("coupling scale must be finite".into()));
    }
    let omega = Array1::from_iter((1..=mode_count).map(|k| k as f64));
    let coupling = omega.mapv(|w| coupling_scale * w.sqrt()).insert_axis(ndarray::Axis(0));
    SystemSpec::new(
        Array1::from(vec![1.0]),
        Array1::zeros(1),
        omega,
        (1..=mode_count as u32).collect(),
        coupling,
        Generator::PeriodicLattice { coupling_scale },
    )
}

/// Identical atoms (ω_a = 1) in a one-dimensional PEC cavity.
///
/// Couplings follow `g[j,k] = g₀ √(ω_k/ω_1) u_n(x_j)` where `n` is the
/// harmonic number of mode `k` under `rule`.
pub fn build_pec_cavity_spec(
    atom_positions: &[f64],
    mode_count: usize,
    rule: HarmonicRule,
    normalization: CouplingNormalization,
) -> Result<SystemSpec> {
    if mode_count < 1 {
        return Err(Error::InvalidSpec("mode_count must be at least 1".into()));
    }
    if atom_positions.is_empty() {
        return Err(Error::InvalidSpec("at least one atom is required".into()));
    }
    if let Some(x) = atom_positions.iter().find(|x| !(-0.5..=0.5).contains(*x)) {
        return Err(Error::InvalidSpec(format!("atom position {x} lies outside the cavity")));
    }
    let harmonics: Vec<u32> = (0..mode_count).map(|k| rule.harmonic(k)).collect();
    let omega = Array1::from_iter(harmonics.iter().map(|&n| n as f64));
    let omega_1 = omega[0];
    let shape = Array2::from_shape_fn((atom_positions.len(), mode_count), |(j, k)| {
        (omega[k] / omega_1).sqrt() * pec_mode_profile(harmonics[k], atom_positions[j])
    });

    let g0 = match normalization {
        CouplingNormalization::Scale { g0 } => g0,
        CouplingNormalization::AnchorPair { atom, mode, target } => {
            if atom >= atom_positions.len() || mode >= mode_count {
                return Err(Error::InvalidSpec(format!(
                    "anchor ({atom}, {mode}) out of range"
                )));
            }
            let anchor = shape[[atom, mode]];
            if anchor.abs() < 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "anchor ({atom}, {mode}) sits on a node of the mode profile"
                )));
            }
            target * omega[mode] / anchor
        }
        CouplingNormalization::MaxRatio { target } => {
            let max_ratio = shape
                .indexed_iter()
                .map(|((_, k), v)| (v / omega[k]).abs())
                .fold(0.0, f64::max);
            target / max_ratio
        }
    };
    if !g0.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "coupling normalization {normalization:?} does not produce a finite prefactor"
        )));
    }
    let coupling = shape.mapv(|v| g0 * v);
    SystemSpec::new(
        Array1::from_elem(atom_positions.len(), 1.0),
        Array1::from(atom_positions.to_vec()),
        omega,
        harmonics,
        coupling,
        Generator::PecCavity { harmonic_rule: rule, normalization, g0 },
    )
}

/// Symmetric `(N_a + M)²` coupling matrix of the star (Dicke) form.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeCouplingMatrix {
    atom_count: usize,
    data: Array2<f64>,
}

impl DickeCouplingMatrix {
    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn mode_count(&self) -> usize {
        self.data.nrows() - self.atom_count
    }

    pub fn size(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    /// Wraps an arbitrary symmetric matrix, checking only symmetry and shape.
    /// Used when feeding a band matrix back into the reduction.
    pub fn from_matrix(data: Array2<f64>, atom_count: usize) -> Result<Self> {
        if data.nrows() != data.ncols() || atom_count == 0 || atom_count > data.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} matrix with {atom_count} atoms",
                data.dim()
            )));
        }
        let asym = max_asymmetry(data.view());
        if asym > 0.0 {
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        Ok(DickeCouplingMatrix { atom_count, data })
    }
}

/// Places `diag(ω_a)`, `g`, `gᵀ`, `diag(ω_f)` into one symmetric matrix.
pub fn assemble_dicke_matrix(spec: &SystemSpec) -> DickeCouplingMatrix {
    let na = spec.atom_count();
    let m = spec.mode_count();
    let mut data = Array2::zeros((na + m, na + m));
    for (j, &w) in spec.atom_frequencies.iter().enumerate() {
        data[[j, j]] = w;
    }
    for (k, &w) in spec.mode_frequencies.iter().enumerate() {
        data[[na + k, na + k]] = w;
    }
    data.slice_mut(s![..na, na..]).assign(&spec.coupling);
    data.slice_mut(s![na.., ..na]).assign(&spec.coupling.t());
    DickeCouplingMatrix { atom_count: na, data }
}

/// Symmetric band coupling matrix: `diag(ω_a)`, lower-triangular `ρ`, and a
/// boson block of bandwidth `N_a` holding `ξ` on its diagonal and `t` off it.
#[derive(Clone, Debug, PartialEq)]
pub struct BandCouplingMatrix {
    atom_count: usize,
    data: Array2<f64>,
}

impl BandCouplingMatrix {
    /// Wraps a matrix without checking the band structure; see
    /// [`crate::transform::validate_band_structure`].
    pub fn from_matrix(data: Array2<f64>, atom_count: usize) -> Self {
        BandCouplingMatrix { atom_count, data }
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn mode_count(&self) -> usize {
        self.data.nrows() - self.atom_count
    }

    pub fn size(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<f64> {
        &mut self.data
    }

    pub fn atom_frequency(&self, j: usize) -> f64 {
        self.data[[j, j]]
    }

    /// `ρ[j, k]`: coupling of atom `j` to chain boson `k` (0-based).
    pub fn rho(&self, j: usize, k: usize) -> f64 {
        self.data[[j, self.atom_count + k]]
    }

    /// `ξ_k`: on-site frequency of chain boson `k`.
    pub fn xi(&self, k: usize) -> f64 {
        let n = self.atom_count + k;
        self.data[[n, n]]
    }

    /// `t[k, l]`: hopping between chain bosons `k` and `l`.
    pub fn hopping(&self, k: usize, l: usize) -> f64 {
        self.data[[self.atom_count + k, self.atom_count + l]]
    }

    pub fn xi_vec(&self) -> Array1<f64> {
        Array1::from_iter((0..self.mode_count()).map(|k| self.xi(k)))
    }
}

/// Accumulated orthogonal transform `Q = Q_last ⋯ Q_1` with `M_B = Q M_D Qᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformRecord {
    pub(crate) atom_count: usize,
    pub(crate) q: Array2<f64>,
    /// Householder vectors of the steps that were not skipped, with their
    /// 1-based step index.
    pub(crate) reflectors: Vec<(usize, Array1<f64>)>,
    /// Set when `M ≤ N_a` and no reduction was attempted.
    pub(crate) degenerate: bool,
}

impl TransformRecord {
    pub fn identity(size: usize, atom_count: usize) -> Self {
        TransformRecord {
            atom_count,
            q: Array2::eye(size),
            reflectors: Vec::new(),
            degenerate: false,
        }
    }

    pub fn q(&self) -> ArrayView2<'_, f64> {
        self.q.view()
    }

    /// Lower-right `M × M` block: `b_j = Σ_k U[j,k] a_k`.
    pub fn u(&self) -> ArrayView2<'_, f64> {
        self.q.slice(s![self.atom_count.., self.atom_count..])
    }

    pub fn reflectors(&self) -> &[(usize, Array1<f64>)] {
        &self.reflectors
    }

    /// True when the reduction was skipped because `M ≤ N_a`; in that regime
    /// `N_a - M + 1` atoms stay coupled to every mode.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `max |QQᵀ - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let qqt = self.q.dot(&self.q.t());
        max_abs_diff(qqt.view(), Array2::eye(self.q.nrows()).view())
    }

    /// `max |Q_atom - I|` plus off-diagonal block magnitude.
    pub fn atom_block_deviation(&self) -> f64 {
        let na = self.atom_count;
        let atom = max_abs_diff(self.q.slice(s![..na, ..na]), Array2::eye(na).view());
        let off = self
            .q
            .slice(s![..na, na..])
            .iter()
            .chain(self.q.slice(s![na.., ..na]).iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        atom.max(off)
    }
}

pub fn max_asymmetry(a: ArrayView2<'_, f64>) -> f64 {
    max_abs_diff(a, a.t())
}

pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}
