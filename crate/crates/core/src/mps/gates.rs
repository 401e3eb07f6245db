use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::linalg::{block_decompose, hermitian_exp, BlockMatrix};
use super::mpo::{decompose_gate_to_mpo, GateMPO};
use crate::error::{Error, Result};
use crate::exact::{band_terms, hermitian_residual, HilbertSpaceLayout, LocalOperatorSet, SparseHamiltonian, Term};
use crate::model::BandCouplingMatrix;

/// Largest gate dimension exponentiated densely.
pub const DENSE_GATE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum GateKind {
    Atom(usize),
    Boson(usize),
}

/// One gate's share of the band Hamiltonian: the terms it carries and the
/// contiguous site window they live on.
#[derive(Clone, Debug)]
pub struct GateGenerator {
    pub kind: GateKind,
    pub start: usize,
    /// Physical dims of the window sites.
    pub dims: Vec<usize>,
    /// Atoms at the front of the window.
    pub window_atoms: usize,
    /// Terms with site indices relative to `start`.
    pub terms: Vec<Term>,
}

impl GateGenerator {
    pub fn span(&self) -> usize {
        self.dims.len()
    }

    pub fn end(&self) -> usize {
        self.start + self.span() - 1
    }

    pub fn dimension(&self) -> usize {
        self.dims.iter().product()
    }

    fn window_layout(&self) -> Result<HilbertSpaceLayout> {
        let nf = self.dims.last().copied().unwrap_or(2);
        let nf = if self.window_atoms == self.span() { 2 } else { nf };
        HilbertSpaceLayout::with_cap(self.window_atoms, self.span() - self.window_atoms, nf, DENSE_GATE_CAP)
            .map_err(|_| Error::GateTooLarge { dim: self.dimension(), cap: DENSE_GATE_CAP })
    }

    /// Dense generator matrix on the window.
    pub fn matrix(&self) -> Result<Array2<C64>> {
        let layout = self.window_layout()?;
        Ok(SparseHamiltonian::new(layout, self.terms.clone())?.matrix().to_dense())
    }
}

/// `exp(-i·dt·h)` for a dense Hermitian generator of dimension at most
/// [`DENSE_GATE_CAP`].
pub fn exponentiate_gate(generator: &Array2<C64>, dt: f64) -> Result<Array2<C64>> {
    Ok(exponentiate_blocks(generator, dt)?.to_dense())
}

pub(crate) fn exponentiate_blocks(generator: &Array2<C64>, dt: f64) -> Result<BlockMatrix> {
    let dim = generator.nrows();
    if dim > DENSE_GATE_CAP {
        return Err(Error::GateTooLarge { dim, cap: DENSE_GATE_CAP });
    }
    let residual = hermitian_residual(generator);
    if residual > 1e-12 {
        return Err(Error::NotHermitian { residual });
    }
    hermitian_exp(&block_decompose(generator), dt)
}

/// Splits the band Hamiltonian's terms into atom gates and boson-chain gates.
///
/// Atom gate `j` carries `(ω_j/2)σᶻ_j` and every `ρ_jk` coupling; boson gate
/// `k` carries `ξ_k` and the hoppings `t_{k,k+d}`, `d = 1..N_a`.
pub fn gate_generators(band: &BandCouplingMatrix, fock_cutoff: usize) -> Vec<GateGenerator> {
    let na = band.atom_count();
    let m = band.mode_count();
    let ops = LocalOperatorSet::new(fock_cutoff);
    let mut atom_terms: Vec<Vec<Term>> = vec![Vec::new(); na];
    let mut boson_terms: Vec<Vec<Term>> = vec![Vec::new(); m];
    for term in band_terms(band, &ops) {
        let first = term.factors.iter().map(|f| f.0).min().expect("term has factors");
        if first < na {
            atom_terms[first].push(term);
        } else {
            boson_terms[first - na].push(term);
        }
    }
    let dim_of = |site: usize| if site < na { 2 } else { fock_cutoff };
    let make = |kind, start: usize, end: usize, terms: Vec<Term>| {
        let terms = terms
            .into_iter()
            .map(|t| Term {
                coefficient: t.coefficient,
                factors: t.factors.into_iter().map(|(s, op)| (s - start, op)).collect(),
            })
            .collect();
        GateGenerator {
            kind,
            start,
            dims: (start..=end).map(dim_of).collect(),
            window_atoms: na.saturating_sub(start).min(end + 1 - start),
            terms,
        }
    };
    let mut gates = Vec::with_capacity(na + m);
    for (j, terms) in atom_terms.into_iter().enumerate() {
        // window reaches boson j, or further only when ρ is not triangular
        let reach = terms.iter().flat_map(|t| t.factors.iter().map(|f| f.0)).max().unwrap_or(j);
        let end = reach.max(na + j.min(m.saturating_sub(1))).min(na + m - 1);
        gates.push(make(GateKind::Atom(j), j, end, terms));
    }
    for (k, terms) in boson_terms.into_iter().enumerate() {
        let end = na + (k + na).min(m - 1);
        gates.push(make(GateKind::Boson(k), na + k, end, terms));
    }
    gates
}

/// Gate ready to apply: the exponentiated block form plus its MPO.
#[derive(Clone, Debug)]
pub struct TrotterGate {
    pub kind: GateKind,
    pub start: usize,
    pub dims: Vec<usize>,
    pub tau: f64,
    pub unitary: BlockMatrix,
    pub mpo: GateMPO,
}

impl TrotterGate {
    pub fn end(&self) -> usize {
        self.start + self.dims.len() - 1
    }

    pub fn build(generator: &GateGenerator, tau: f64) -> Result<Self> {
        let unitary = exponentiate_blocks(&generator.matrix()?, tau)?;
        let mpo = decompose_gate_to_mpo(&unitary.to_dense(), generator.start, &generator.dims)?;
        Ok(TrotterGate {
            kind: generator.kind,
            start: generator.start,
            dims: generator.dims.clone(),
            tau,
            unitary,
            mpo,
        })
    }
}

/// Second-order layered schedule. One step applies `layers[0..L-1]` at
/// `dt/2`, `layers[L-1]` at `dt`, then `layers[L-2..0]` at `dt/2`.
#[derive(Clone, Debug)]
pub struct TrotterSchedule {
    pub dt: f64,
    pub generators: Vec<GateGenerator>,
    /// Gate indices into `generators`, grouped by layer.
    pub layers: Vec<Vec<usize>>,
    half: Vec<TrotterGate>,
    full: Vec<Option<TrotterGate>>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ScheduleSummary {
    pub dt: f64,
    pub layer_count: usize,
    pub gate_count: usize,
    pub gate_applications_per_step: usize,
    pub max_gate_span: usize,
    pub max_gate_dimension: usize,
    pub max_mpo_bond: usize,
}

impl TrotterSchedule {
    pub fn gate(&self, index: usize, full_step: bool) -> &TrotterGate {
        if full_step {
            self.full[index].as_ref().expect("middle layer holds full-step gates")
        } else {
            &self.half[index]
        }
    }

    /// Layer sequence of one step as `(layer, full_step)` pairs.
    pub fn sequence(&self) -> Vec<(usize, bool)> {
        let l = self.layers.len();
        (0..l)
            .map(|i| (i, i + 1 == l))
            .chain((0..l.saturating_sub(1)).rev().map(|i| (i, false)))
            .collect()
    }

    /// `Σ` of all gate generators embedded in the full space, for auditing
    /// against the band Hamiltonian.
    pub fn generator_sum(&self, layout: &HilbertSpaceLayout) -> Result<SparseHamiltonian> {
        let terms = self
            .generators
            .iter()
            .flat_map(|g| {
                g.terms.iter().map(move |t| Term {
                    coefficient: t.coefficient,
                    factors: t.factors.iter().map(|(s, op)| (s + g.start, op.clone())).collect(),
                })
            })
            .collect();
        SparseHamiltonian::new(layout.clone(), terms)
    }

    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary {
            dt: self.dt,
            layer_count: self.layers.len(),
            gate_count: self.generators.len(),
            gate_applications_per_step: self
                .sequence()
                .iter()
                .map(|(l, _)| self.layers[*l].len())
                .sum(),
            max_gate_span: self.generators.iter().map(|g| g.span()).max().unwrap_or(0),
            max_gate_dimension: self.generators.iter().map(|g| g.dimension()).max().unwrap_or(0),
            max_mpo_bond: self.half.iter().map(|g| g.mpo.max_bond()).max().unwrap_or(0),
        }
    }

    pub fn gates(&self) -> impl Iterator<Item = &TrotterGate> {
        self.half.iter().chain(self.full.iter().flatten())
    }
}

/// Builds the second-order TEBD schedule for `band` with step `dt`.
///
/// Layers: one per atom gate (atom gates overlap), then boson gates grouped
/// by `k mod (N_a + 1)`.
pub fn build_gate_layers(
    band: &BandCouplingMatrix,
    layout: &HilbertSpaceLayout,
    dt: f64,
) -> Result<TrotterSchedule> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step {dt} must be positive")));
    }
    if layout.atom_count() != band.atom_count() || layout.mode_count() != band.mode_count() {
        return Err(Error::DimensionMismatch("layout does not match band matrix".into()));
    }
    let na = band.atom_count();
    let generators = gate_generators(band, layout.fock_cutoff());
    let mut layers: Vec<Vec<usize>> = (0..na).map(|j| vec![j]).collect();
    let period = na + 1;
    for r in 0..period.min(band.mode_count()) {
        layers.push((0..band.mode_count()).filter(|k| k % period == r).map(|k| na + k).collect());
    }
    for layer in &layers {
        for pair in layer.windows(2) {
            if generators[pair[0]].end() >= generators[pair[1]].start {
                return Err(Error::InvalidState("overlapping gates within a layer".into()));
            }
        }
    }
    let last = layers.len() - 1;
    let half = generators
        .iter()
        .map(|g| TrotterGate::build(g, dt / 2.0))
        .collect::<Result<Vec<_>>>()?;
    let mut full: Vec<Option<TrotterGate>> = vec![None; generators.len()];
    for &g in &layers[last] {
        full[g] = Some(TrotterGate::build(&generators[g], dt)?);
    }
    Ok(TrotterSchedule { dt, generators, layers, half, full })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::build_band_hamiltonian;
    use crate::model::{assemble_dicke_matrix, SystemSpec};
    use crate::transform::band_reduce;
    use ndarray::array;

    fn band_2x3() -> BandCouplingMatrix {
        let spec = SystemSpec::from_couplings(
            vec![1.0, 1.1],
            vec![0.8, 1.3, 2.1],
            array![[0.1, 0.2, -0.05], [0.15, -0.1, 0.3]],
        )
        .unwrap();
        band_reduce(&assemble_dicke_matrix(&spec)).0
    }

    #[test]
    fn term_sum_audit() {
        let band = band_2x3();
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let schedule = build_gate_layers(&band, &layout, 0.1).unwrap();
        let sum = schedule.generator_sum(&layout).unwrap().matrix().to_dense();
        let h = build_band_hamiltonian(&band, &layout).unwrap().matrix().to_dense();
        let diff = (&sum - &h).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn two_atom_windows() {
        let band = band_2x3();
        let gens = gate_generators(&band, 3);
        // sites: a0 a1 b0 b1 b2
        let windows: Vec<_> = gens.iter().map(|g| (g.kind, g.start, g.end())).collect();
        assert_eq!(
            windows,
            vec![
                (GateKind::Atom(0), 0, 2),
                (GateKind::Atom(1), 1, 3),
                (GateKind::Boson(0), 2, 4),
                (GateKind::Boson(1), 3, 4),
                (GateKind::Boson(2), 4, 4),
            ]
        );
        assert_eq!(gens[0].dims, vec![2, 2, 3]);
        assert_eq!(gens[1].dims, vec![2, 3, 3]);
        assert_eq!(gens[0].window_atoms, 2);
        assert_eq!(gens[1].window_atoms, 1);
    }

    #[test]
    fn layers_are_disjoint_and_complete() {
        let band = band_2x3();
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let s = build_gate_layers(&band, &layout, 0.1).unwrap();
        let mut seen: Vec<usize> = s.layers.iter().flatten().copied().collect();
        seen.sort();
        assert_eq!(seen, (0..5).collect::<Vec<_>>());
        assert_eq!(s.sequence().len(), 2 * s.layers.len() - 1);
    }

    #[test]
    fn zero_generator_gives_identity() {
        let u = exponentiate_gate(&Array2::zeros((6, 6)), 0.7).unwrap();
        assert!((&u - &Array2::<C64>::eye(6)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn number_operator_phases() {
        let ops = LocalOperatorSet::new(5);
        let xi = 1.7;
        let u = exponentiate_gate(&ops.number.mapv(|z| z * xi), 0.3).unwrap();
        for n in 0..5 {
            let expect = C64::from_polar(1.0, -xi * n as f64 * 0.3);
            assert!((u[[n, n]] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn hopping_rotation() {
        // t(b†₁b₂ + h.c.) with N_f = 2: one-excitation block |01⟩,|10⟩
        let ops = LocalOperatorSet::new(2);
        let t = 0.8;
        let dt = 0.45;
        let h = (ndarray::linalg::kron(&ops.creation, &ops.annihilation)
            + ndarray::linalg::kron(&ops.annihilation, &ops.creation))
        .mapv(|z| z * t);
        let u = exponentiate_gate(&h, dt).unwrap();
        let (c, s) = ((t * dt).cos(), (t * dt).sin());
        let i = C64::new(0.0, 1.0);
        let expected = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(c, 0.0), -i * s, C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), -i * s, C64::new(c, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ];
        assert!((&u - &expected).iter().all(|z| z.norm() < 1e-14));
        let unit = adjoint_dot(&u);
        assert!((&unit - &Array2::<C64>::eye(4)).iter().all(|z| z.norm() < 1e-12));
    }

    fn adjoint_dot(u: &Array2<C64>) -> Array2<C64> {
        u.t().mapv(|z| z.conj()).dot(u)
    }

    #[test]
    fn cap_enforced() {
        let big = Array2::<C64>::zeros((DENSE_GATE_CAP + 1, 1));
        // only the row count matters for the cap check
        assert!(matches!(
            exponentiate_blocks(&big, 0.1),
            Err(Error::GateTooLarge { .. })
        ));
    }
}
