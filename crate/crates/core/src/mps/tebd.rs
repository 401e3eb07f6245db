use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::gates::{TrotterGate, TrotterSchedule};
use super::linalg::truncated_split;
use super::observables::{atomic_populations, boson_correlation_matrix, entanglement_entropy, two_site_rdm};
use super::state::Mps;
use crate::error::{Error, Result};

/// Bond cap, discarded-weight cutoff and the running record of what was
/// dropped.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    /// Largest summed squared singular values dropped in one split.
    pub cutoff: f64,
    #[serde(default)]
    pub cumulative_discarded: f64,
    #[serde(default)]
    pub truncations: u64,
    #[serde(default)]
    pub max_bond_reached: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::new(128, 1e-10)
    }
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, cutoff: f64) -> Self {
        TruncationPolicy { chi_max, cutoff, cumulative_discarded: 0.0, truncations: 0, max_bond_reached: 1 }
    }

    fn record(&mut self, kept: usize, discarded: f64) {
        self.cumulative_discarded += discarded;
        self.truncations += 1;
        self.max_bond_reached = self.max_bond_reached.max(kept);
    }
}

/// Applies a gate to its window and re-splits by SVD under `policy`.
///
/// The window is contracted into one tensor and multiplied by the gate's
/// block-sparse matrix; the split direction follows the canonical center so
/// the center ends on the far side of the window. Returns the discarded
/// weight.
pub fn apply_mpo_and_truncate(mps: &mut Mps, gate: &TrotterGate, policy: &mut TruncationPolicy) -> Result<f64> {
    let (start, end) = (gate.start, gate.end());
    if end >= mps.site_count() || mps.physical_dims()[start..=end] != gate.dims[..] {
        return Err(Error::DimensionMismatch(format!("gate on sites {start}..={end} does not fit the MPS")));
    }
    let rightward = mps.center() <= start || mps.center() < end && mps.center() - start <= end - mps.center();
    mps.move_center(if rightward { start } else { end })?;

    // θ as (window, left·right)
    let l = mps.tensor(start).dim().0;
    let mut acc = mps.tensor(start).to_owned().into_shape_with_order((l * gate.dims[0], mps.tensor(start).dim().2)).expect("contiguous");
    for site in start + 1..=end {
        let (m, d, r) = mps.tensor(site).dim();
        let t = mps.tensor(site).to_owned().into_shape_with_order((m, d * r)).expect("contiguous");
        let rows = acc.nrows();
        acc = acc.dot(&t).into_shape_with_order((rows * d, r)).expect("contiguous");
    }
    let r = acc.ncols();
    let dim: usize = gate.dims.iter().product();
    let theta = acc.into_shape_with_order((l, dim, r)).expect("contiguous");
    let theta = theta.permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
    let theta = theta.into_shape_with_order((dim, l * r)).expect("contiguous");
    let theta = gate.unitary.apply(&theta);
    let theta = theta.into_shape_with_order((dim, l, r)).expect("contiguous");
    let theta: Array3<C64> = theta.permuted_axes([1, 0, 2]).as_standard_layout().into_owned();

    let discarded = split_window(mps, theta, start, &gate.dims, rightward, policy)?;
    mps.check_finite()?;
    Ok(discarded)
}

fn split_window(
    mps: &mut Mps,
    theta: Array3<C64>,
    start: usize,
    dims: &[usize],
    rightward: bool,
    policy: &mut TruncationPolicy,
) -> Result<f64> {
    let n = dims.len();
    let (l, _, r) = theta.dim();
    let mut total = 0.0;
    if rightward {
        let mut rest = theta.into_shape_with_order((l, dims.iter().product::<usize>() * r)).expect("contiguous");
        let mut left = l;
        for (k, &d) in dims[..n - 1].iter().enumerate() {
            let cols = rest.len() / (left * d);
            let mat = rest.into_shape_with_order((left * d, cols)).expect("contiguous");
            let (u, sk, r, dropped) = truncated_split(mat, true, policy.chi_max, policy.cutoff)?;
            let keep = sk.len();
            policy.record(keep, dropped);
            total += dropped;
            mps.set_tensor(start + k, u.into_shape_with_order((left, d, keep)).expect("contiguous"));
            rest = r;
            mps.set_bond(start + k, sk);
            left = keep;
        }
        let d = dims[n - 1];
        mps.set_tensor(start + n - 1, rest.into_shape_with_order((left, d, r)).expect("contiguous"));
        mps.set_center(start + n - 1);
    } else {
        let mut rest = theta.into_shape_with_order((l * dims.iter().product::<usize>(), r)).expect("contiguous");
        let mut right = r;
        for k in (1..n).rev() {
            let d = dims[k];
            let rows = rest.len() / (d * right);
            let mat = rest.into_shape_with_order((rows, d * right)).expect("contiguous");
            let (vt, sk, r, dropped) = truncated_split(mat, false, policy.chi_max, policy.cutoff)?;
            let keep = sk.len();
            policy.record(keep, dropped);
            total += dropped;
            mps.set_tensor(start + k, vt.into_shape_with_order((keep, d, right)).expect("contiguous"));
            rest = r;
            mps.set_bond(start + k - 1, sk);
            right = keep;
        }
        let d = dims[0];
        mps.set_tensor(start, rest.into_shape_with_order((l, d, right)).expect("contiguous"));
        mps.set_center(start);
    }
    Ok(total)
}

/// Applies one second-order step of `schedule`.
pub fn tebd_step(mps: &mut Mps, schedule: &TrotterSchedule, policy: &mut TruncationPolicy) -> Result<f64> {
    let mut discarded = 0.0;
    for (layer, full) in schedule.sequence() {
        let gates = &schedule.layers[layer];
        // sweep the layer from whichever end is nearer the center
        let first = schedule.gate(gates[0], full).start;
        let last = schedule.gate(*gates.last().expect("nonempty layer"), full).end();
        let forward = mps.center().abs_diff(first) <= mps.center().abs_diff(last);
        let order: Vec<usize> = if forward { gates.clone() } else { gates.iter().rev().copied().collect() };
        for g in order {
            discarded += apply_mpo_and_truncate(mps, schedule.gate(g, full), policy)?;
        }
    }
    Ok(discarded)
}

/// What to measure at each sampled time.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObservableConfig {
    /// Record every `stride` steps (the initial state is always recorded).
    pub stride: usize,
    /// Bonds whose entanglement entropy is recorded.
    #[serde(default)]
    pub entropy_bonds: Vec<usize>,
    /// Record the first two sites' reduced density matrix diagonal.
    #[serde(default)]
    pub two_atom_components: bool,
    /// Record `⟨b†_i b_j⟩`.
    #[serde(default)]
    pub boson_correlations: bool,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        ObservableConfig { stride: 1, entropy_bonds: Vec::new(), two_atom_components: false, boson_correlations: false }
    }
}

#[derive(Clone, Debug)]
pub struct TebdRecord {
    pub step: usize,
    pub time: f64,
    pub populations: Vec<f64>,
    /// `gg, ge, eg, ee` probabilities.
    pub components: Option<[f64; 4]>,
    pub entropies: Vec<f64>,
    pub norm: f64,
    pub cumulative_discarded: f64,
    pub max_bond: usize,
    pub boson_correlation: Option<Array2<C64>>,
}

#[derive(Clone, Debug)]
pub struct TebdTrajectory {
    pub records: Vec<TebdRecord>,
    pub final_state: Mps,
    pub policy: TruncationPolicy,
}

fn measure(mps: &mut Mps, step: usize, time: f64, atoms: usize, modes: usize, config: &ObservableConfig, policy: &TruncationPolicy) -> Result<TebdRecord> {
    let entropies = config
        .entropy_bonds
        .iter()
        .map(|&b| entanglement_entropy(mps, b))
        .collect::<Result<Vec<_>>>()?;
    let components = if config.two_atom_components {
        let rdm = two_site_rdm(mps)?;
        Some([rdm[[0, 0]].re, rdm[[1, 1]].re, rdm[[2, 2]].re, rdm[[3, 3]].re])
    } else {
        None
    };
    Ok(TebdRecord {
        step,
        time,
        populations: atomic_populations(mps, atoms),
        components,
        entropies,
        norm: mps.norm(),
        cumulative_discarded: policy.cumulative_discarded,
        max_bond: mps.max_bond_dim(),
        boson_correlation: config.boson_correlations.then(|| boson_correlation_matrix(mps, modes)),
    })
}

/// Runs `steps` TEBD steps, recording observables every `config.stride`
/// steps. `progress` sees each record as it is taken.
pub fn tebd_run<F>(
    mps0: Mps,
    schedule: &TrotterSchedule,
    mut policy: TruncationPolicy,
    steps: usize,
    atom_count: usize,
    config: &ObservableConfig,
    mut progress: F,
) -> Result<TebdTrajectory>
where
    F: FnMut(&TebdRecord),
{
    if config.stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    let modes = mps0.site_count() - atom_count;
    let mut mps = mps0;
    let mut records = Vec::with_capacity(steps / config.stride + 1);
    let first = measure(&mut mps, 0, 0.0, atom_count, modes, config, &policy)?;
    progress(&first);
    records.push(first);
    for step in 1..=steps {
        tebd_step(&mut mps, schedule, &mut policy)?;
        if step % config.stride == 0 {
            let rec = measure(&mut mps, step, step as f64 * schedule.dt, atom_count, modes, config, &policy)?;
            progress(&rec);
            records.push(rec);
        }
    }
    Ok(TebdTrajectory { records, final_state: mps, policy })
}

#[cfg(test)]
mod tests {
    use ndarray::Array1;

    use super::*;
    use crate::exact::{build_band_hamiltonian, evolve, HilbertSpaceLayout, StateVector};
    use crate::initial::InitialState;
    use crate::model::{assemble_dicke_matrix, BandCouplingMatrix, SystemSpec};
    use crate::mps::gates::build_gate_layers;
    use crate::mps::init_product_mps;
    use crate::transform::band_reduce;
    use ndarray::array;

    fn band_2x3() -> BandCouplingMatrix {
        let spec = SystemSpec::from_couplings(
            vec![1.0, 1.0],
            vec![0.9, 1.4, 2.2],
            array![[0.12, 0.2, -0.08], [0.1, -0.15, 0.25]],
        )
        .unwrap();
        band_reduce(&assemble_dicke_matrix(&spec)).0
    }

    fn fidelity(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
    }

    #[test]
    fn identity_gate_leaves_state() {
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let band = BandCouplingMatrix::from_matrix(Array2::zeros((5, 5)), 2);
        let schedule = build_gate_layers(&band, &layout, 0.1).unwrap();
        let mut mps = init_product_mps(&layout, &InitialState::Psi1).unwrap();
        let before = mps.to_dense();
        let mut policy = TruncationPolicy::default();
        for gate in schedule.gates() {
            let w = apply_mpo_and_truncate(&mut mps, gate, &mut policy).unwrap();
            assert!(w < 1e-14);
        }
        assert!((&mps.to_dense() - &before).iter().all(|z| z.norm() < 1e-14));
        assert!(mps.isometry_residual() < 1e-12);
    }

    #[test]
    fn step_matches_exact() {
        let band = band_2x3();
        let layout = HilbertSpaceLayout::new(2, 3, 4).unwrap();
        let dt = 2.0 * std::f64::consts::PI / 100.0;
        let schedule = build_gate_layers(&band, &layout, dt).unwrap();
        let h = build_band_hamiltonian(&band, &layout).unwrap();
        let psi0 = StateVector::from_initial(&layout, &InitialState::Psi1).unwrap();
        let mut mps = init_product_mps(&layout, &InitialState::Psi1).unwrap();
        let mut policy = TruncationPolicy::new(64, 1e-10);
        let mut exact = psi0;
        for _ in 0..5 {
            exact = evolve(&h, &exact, dt / 20.0, 20, 20, |_| Ok(())).unwrap();
            tebd_step(&mut mps, &schedule, &mut policy).unwrap();
            let f = fidelity(&exact.amplitudes, &mps.to_dense());
            assert!(f > 1.0 - 1e-6, "{f}");
            assert!(mps.isometry_residual() < 1e-10);
        }
        assert!(1.0 - mps.norm().powi(2) <= policy.cumulative_discarded + 1e-12);
    }

    #[test]
    fn zero_coupling_keeps_populations() {
        let spec = SystemSpec::from_couplings(vec![1.0, 1.0], vec![1.0, 2.0, 3.0], Array2::zeros((2, 3))).unwrap();
        let band = band_reduce(&assemble_dicke_matrix(&spec)).0;
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let schedule = build_gate_layers(&band, &layout, 0.05).unwrap();
        let mps = init_product_mps(&layout, &InitialState::Psi3).unwrap();
        let config = ObservableConfig { stride: 100, ..Default::default() };
        let run = tebd_run(mps, &schedule, TruncationPolicy::default(), 1000, 2, &config, |_| {}).unwrap();
        for rec in &run.records {
            for p in &rec.populations {
                assert!((p - 0.5).abs() < 1e-12);
            }
        }
        assert_eq!(run.records.len(), 11);
    }

    #[test]
    fn entangling_gate_grows_bond() {
        let band = band_2x3();
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let schedule = build_gate_layers(&band, &layout, 0.3).unwrap();
        let mut mps = init_product_mps(&layout, &InitialState::AllExcited).unwrap();
        let mut policy = TruncationPolicy::default();
        let gate = schedule.gate(0, false);
        apply_mpo_and_truncate(&mut mps, gate, &mut policy).unwrap();
        let bonds = mps.bond_dims();
        assert!(bonds[1] > 1);
        assert!(bonds[1] <= gate.mpo.bond_dims()[1]);
    }
}
