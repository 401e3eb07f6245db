use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::hamiltonian::SparseHamiltonian;
use super::layout::HilbertSpaceLayout;
use crate::error::{Error, Result};
use crate::initial::InitialState;

/// Norm drift tolerated over a full RK4 run.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-8;

/// Full state vector over a [`HilbertSpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub layout: HilbertSpaceLayout,
    pub amplitudes: Array1<C64>,
    pub time: f64,
}

impl StateVector {
    /// Atom register in `initial`, every boson in `|0⟩`.
    pub fn from_initial(layout: &HilbertSpaceLayout, initial: &InitialState) -> Result<Self> {
        let atoms = initial.atom_amplitudes(layout.atom_count())?;
        let boson_block = layout.dimension() >> layout.atom_count();
        let mut amplitudes = Array1::zeros(layout.dimension());
        for (a, amp) in atoms.iter().enumerate() {
            amplitudes[a * boson_block] = *amp;
        }
        Ok(StateVector { layout: layout.clone(), amplitudes, time: 0.0 })
    }

    /// Product of per-site local vectors.
    pub fn product(layout: &HilbertSpaceLayout, locals: &[Array1<C64>]) -> Result<Self> {
        if locals.len() != layout.site_count()
            || locals.iter().zip(layout.dims()).any(|(v, d)| v.len() != *d)
        {
            return Err(Error::DimensionMismatch("local vectors do not match layout".into()));
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        for v in locals {
            amps = amps.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        }
        Ok(StateVector { layout: layout.clone(), amplitudes: Array1::from(amps), time: 0.0 })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨σ⁺_j σ⁻_j⟩`, the excited-state population of atom `j`.
    pub fn atomic_population(&self, j: usize) -> Result<f64> {
        if j >= self.layout.atom_count() {
            return Err(Error::DimensionMismatch(format!("atom index {j} out of range")));
        }
        Ok(self
            .amplitudes
            .indexed_iter()
            .filter(|(i, _)| self.layout.digit(*i, j) == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Diagonal of the two-atom reduced density matrix in the order
    /// `gg, ge, eg, ee`.
    pub fn two_atom_components(&self) -> Result<[f64; 4]> {
        if self.layout.atom_count() != 2 {
            return Err(Error::WrongAtomCount { expected: 2, found: self.layout.atom_count() });
        }
        let block = self.layout.dimension() / 4;
        let mut out = [0.0; 4];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[i / block] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Reduced density matrix of the atom register (`2^N_a` square).
    pub fn atom_density_matrix(&self) -> Array2<C64> {
        let da = 1usize << self.layout.atom_count();
        let block = self.layout.dimension() / da;
        let psi = self
            .amplitudes
            .view()
            .into_shape_with_order((da, block))
            .expect("atom-major layout");
        psi.dot(&psi.t().mapv(|z| z.conj()))
    }

    /// `⟨b†_i b_j⟩` over the boson sites.
    pub fn boson_correlation_matrix(&self) -> Array2<C64> {
        let layout = &self.layout;
        let m = layout.mode_count();
        let mut out = Array2::zeros((m, m));
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..m {
                let sj = layout.boson_site(j);
                let nj = layout.digit(idx, sj);
                if nj == 0 {
                    continue;
                }
                // b_j |idx⟩ = √n_j |idx - e_j⟩
                let lowered = idx - layout.stride(sj);
                let a_j = (nj as f64).sqrt();
                for i in 0..m {
                    let si = layout.boson_site(i);
                    let ni = layout.digit(lowered, si);
                    if ni + 1 >= layout.fock_cutoff() {
                        continue;
                    }
                    let raised = lowered + layout.stride(si);
                    let a_i = ((ni + 1) as f64).sqrt();
                    out[[i, j]] += self.amplitudes[raised].conj() * amp * (a_i * a_j);
                }
            }
        }
        out
    }

    /// Occupation of the highest Fock level, summed over modes.
    pub fn top_fock_occupancy(&self) -> f64 {
        let layout = &self.layout;
        let top = layout.fock_cutoff() - 1;
        (0..layout.mode_count())
            .map(|k| {
                let s = layout.boson_site(k);
                self.amplitudes
                    .indexed_iter()
                    .filter(|(i, _)| layout.digit(*i, s) == top)
                    .map(|(_, a)| a.norm_sqr())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Fixed-step RK4 integration of `dψ/dt = -iHψ`.
///
/// `observer` is called with the initial state and then after every `stride`
/// steps. Fails if the norm drifts by more than [`NORM_DRIFT_TOLERANCE`].
pub fn evolve<F>(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    dt: f64,
    steps: usize,
    stride: usize,
    mut observer: F,
) -> Result<StateVector>
where
    F: FnMut(&StateVector) -> Result<()>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt = {dt} must be positive")));
    }
    if psi0.layout != *h.layout() {
        return Err(Error::DimensionMismatch("state and Hamiltonian layouts differ".into()));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("initial norm {}", psi0.norm())));
    }
    let stride = stride.max(1);
    let n = h.dimension();
    let mut state = psi0.clone();
    let t0 = psi0.time;
    observer(&state)?;

    let minus_i = C64::new(0.0, -1.0);
    let mut k = vec![C64::new(0.0, 0.0); n];
    let mut acc = vec![C64::new(0.0, 0.0); n];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    for step in 1..=steps {
        let psi = state.amplitudes.as_slice_mut().expect("contiguous");
        acc.copy_from_slice(psi);
        // k1 = -iHψ
        h.apply(psi, &mut k);
        for ((a, t), (kv, p)) in acc.iter_mut().zip(tmp.iter_mut()).zip(k.iter().zip(psi.iter())) {
            let kv = minus_i * kv;
            *a += kv * (dt / 6.0);
            *t = p + kv * (dt / 2.0);
        }
        // k2
        h.apply(&tmp, &mut k);
        for ((a, t), (kv, p)) in acc.iter_mut().zip(tmp.iter_mut()).zip(k.iter().zip(psi.iter())) {
            let kv = minus_i * kv;
            *a += kv * (dt / 3.0);
            *t = p + kv * (dt / 2.0);
        }
        // k3
        h.apply(&tmp, &mut k);
        for ((a, t), (kv, p)) in acc.iter_mut().zip(tmp.iter_mut()).zip(k.iter().zip(psi.iter())) {
            let kv = minus_i * kv;
            *a += kv * (dt / 3.0);
            *t = p + kv * dt;
        }
        // k4
        h.apply(&tmp, &mut k);
        for (a, kv) in acc.iter_mut().zip(k.iter()) {
            *a += minus_i * kv * (dt / 6.0);
        }
        psi.copy_from_slice(&acc);
        state.time = t0 + step as f64 * dt;

        let drift = (state.norm() - 1.0).abs();
        if drift > NORM_DRIFT_TOLERANCE || !drift.is_finite() {
            return Err(Error::NormDrift { step, drift });
        }
        if step % stride == 0 {
            observer(&state)?;
        }
    }
    Ok(state)
}

/// Collects the sampled states of [`evolve`]. Only sensible for small systems.
pub fn evolve_trajectory(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::new();
    evolve(h, psi0, dt, steps, stride, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{build_dicke_hamiltonian, HilbertSpaceLayout};
    use crate::model::SystemSpec;
    use ndarray::array;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn excited_atom_decoupled_stays_excited() {
        let spec = SystemSpec::from_couplings(vec![1.0], vec![1.0, 2.0], array![[0.0, 0.0]])
            .unwrap();
        let layout = HilbertSpaceLayout::new(1, 2, 3).unwrap();
        let h = build_dicke_hamiltonian(&spec, &layout).unwrap();
        let psi = StateVector::from_initial(&layout, &InitialState::AllExcited).unwrap();
        let traj = evolve_trajectory(&h, &psi, 0.01, 500, 50).unwrap();
        for s in &traj {
            assert!((s.atomic_population(0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_only_picks_up_phase() {
        let spec = SystemSpec::from_couplings(vec![1.0], vec![1.0], array![[0.0]]).unwrap();
        let layout = HilbertSpaceLayout::new(1, 1, 4).unwrap();
        let h = build_dicke_hamiltonian(&spec, &layout).unwrap();
        let psi = StateVector::from_initial(&layout, &InitialState::Custom(vec![[1.0, 0.0], [0.0, 0.0]]))
            .unwrap();
        let end = evolve(&h, &psi, 0.01, 300, 1, |_| Ok(())).unwrap();
        // |g,0⟩ has energy -1/2: ψ(t) = e^{it/2} |g,0⟩
        let expected = C64::from_polar(1.0, 0.5 * end.time);
        assert!((end.amplitudes[0] - expected).norm() < 1e-9);
        assert!(end.amplitudes.iter().skip(1).all(|a| a.norm() == 0.0));
    }

    #[test]
    fn population_examples() {
        let layout = HilbertSpaceLayout::new(1, 2, 2).unwrap();
        let psi = StateVector::from_initial(&layout, &InitialState::AllExcited).unwrap();
        assert_eq!(psi.atomic_population(0).unwrap(), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sup = StateVector::from_initial(&layout, &InitialState::Custom(vec![[h, 0.0], [h, 0.0]]))
            .unwrap();
        assert!((sup.atomic_population(0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_atom_components_of_named_states() {
        let layout = HilbertSpaceLayout::new(2, 2, 3).unwrap();
        let p1 = StateVector::from_initial(&layout, &InitialState::Psi1).unwrap();
        let comps = p1.two_atom_components().unwrap();
        for (x, y) in comps.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((x - y).abs() < 1e-15);
        }
        let p3 = StateVector::from_initial(&layout, &InitialState::Psi3).unwrap();
        let comps = p3.two_atom_components().unwrap();
        assert!(comps.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let one_atom = HilbertSpaceLayout::new(1, 2, 3).unwrap();
        let s = StateVector::from_initial(&one_atom, &InitialState::AllExcited).unwrap();
        assert!(s.two_atom_components().is_err());
    }

    #[test]
    fn product_state_matches_from_initial() {
        let layout = HilbertSpaceLayout::new(2, 1, 3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = array![c(h), c(h)];
        let vac = array![c(1.0), c(0.0), c(0.0)];
        let p = StateVector::product(&layout, &[plus.clone(), plus, vac]).unwrap();
        let q = StateVector::from_initial(&layout, &InitialState::Psi3).unwrap();
        for (a, b) in p.amplitudes.iter().zip(q.amplitudes.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn norm_drift_guard_trips_on_large_dt() {
        let spec = SystemSpec::from_couplings(vec![1.0], vec![1.0], array![[0.5]]).unwrap();
        let layout = HilbertSpaceLayout::new(1, 1, 6).unwrap();
        let h = build_dicke_hamiltonian(&spec, &layout).unwrap();
        let psi = StateVector::from_initial(&layout, &InitialState::AllExcited).unwrap();
        let err = evolve(&h, &psi, 0.5, 100, 1, |_| Ok(())).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }));
    }

    #[test]
    fn single_photon_correlation() {
        let layout = HilbertSpaceLayout::new(1, 3, 3).unwrap();
        let mut locals = vec![array![c(1.0), c(0.0)]];
        for k in 0..3 {
            let mut v = array![c(0.0), c(0.0), c(0.0)];
            v[if k == 1 { 1 } else { 0 }] = c(1.0);
            locals.push(v);
        }
        let s = StateVector::product(&layout, &locals).unwrap();
        let corr = s.boson_correlation_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert!((corr[[i, j]] - c(e)).norm() < 1e-15, "{corr}");
            }
        }
    }
}
