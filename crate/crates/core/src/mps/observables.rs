use ndarray::{s, Array1, Array2, Array3};
use num_complex::Complex64 as C64;

use super::linalg::{adjoint, svd};
use super::state::Mps;
use crate::error::{Error, Result};
use crate::exact::LocalOperatorSet;
use crate::model::{pec_mode_profile, SystemSpec, TransformRecord};

/// `op` acting on the physical index of `a`.
fn apply_physical(a: &Array3<C64>, op: &Array2<C64>) -> Array3<C64> {
    let (l, d, r) = a.dim();
    let mut out = Array3::zeros((l, op.nrows(), r));
    for b in 0..l {
        out.slice_mut(s![b, .., ..]).assign(&op.dot(&a.slice(s![b, .., ..])));
    }
    debug_assert_eq!(op.ncols(), d);
    out
}

fn flat(a: &Array3<C64>, rows: usize, cols: usize) -> Array2<C64> {
    a.as_standard_layout().into_owned().into_shape_with_order((rows, cols)).expect("contiguous")
}

/// Left environment `(bra, ket)` pushed through one site.
fn transfer_left(env: &Array2<C64>, a: &Array3<C64>, op: Option<&Array2<C64>>) -> Array2<C64> {
    let (l, d, r) = a.dim();
    let x = env.dot(&flat(a, l, d * r)).into_shape_with_order((env.nrows(), d, r)).expect("contiguous");
    let y = match op {
        Some(op) => apply_physical(&x, op),
        None => x,
    };
    adjoint(&flat(a, l * d, r)).dot(&flat(&y, env.nrows() * d, r))
}

/// Right environment `(ket, bra)` pushed through one site.
fn transfer_right(env: &Array2<C64>, a: &Array3<C64>, op: Option<&Array2<C64>>) -> Array2<C64> {
    let (l, d, r) = a.dim();
    let x = flat(a, l * d, r).dot(env).into_shape_with_order((l, d, env.ncols())).expect("contiguous");
    let y = match op {
        Some(op) => apply_physical(&x, op),
        None => x,
    };
    flat(&y, l, d * env.ncols()).dot(&flat(a, l, d * r).mapv(|z| z.conj()).t())
}

fn close(left: &Array2<C64>, right: &Array2<C64>) -> C64 {
    left.iter().zip(right.t().iter()).map(|(a, b)| a * b).sum()
}

/// Left and right identity environments of a frozen MPS; no canonical form
/// is assumed.
pub struct Environments<'a> {
    mps: &'a Mps,
    left: Vec<Array2<C64>>,
    right: Vec<Array2<C64>>,
    norm_sqr: f64,
}

impl<'a> Environments<'a> {
    pub fn new(mps: &'a Mps) -> Self {
        let n = mps.site_count();
        let one = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        let mut left = vec![one.clone()];
        for t in mps.tensors() {
            let next = transfer_left(left.last().expect("seeded"), t, None);
            left.push(next);
        }
        let mut right = vec![one; n + 1];
        for k in (0..n).rev() {
            right[k] = transfer_right(&right[k + 1], mps.tensor(k), None);
        }
        let norm_sqr = left[n][[0, 0]].re;
        Environments { mps, left, right, norm_sqr }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    /// Normalized `⟨O_site⟩`.
    pub fn local(&self, site: usize, op: &Array2<C64>) -> C64 {
        let e = transfer_left(&self.left[site], self.mps.tensor(site), Some(op));
        close(&e, &self.right[site + 1]) / self.norm_sqr
    }

    /// Normalized `⟨A_i B_j⟩` for `i < j`.
    pub fn two_point_row(&self, i: usize, a: &Array2<C64>, b: &Array2<C64>, js: std::ops::Range<usize>) -> Vec<C64> {
        let mut e = transfer_left(&self.left[i], self.mps.tensor(i), Some(a));
        let mut out = Vec::with_capacity(js.len());
        let mut k = i + 1;
        for j in js {
            while k < j {
                e = transfer_left(&e, self.mps.tensor(k), None);
                k += 1;
            }
            let closed = transfer_left(&e, self.mps.tensor(j), Some(b));
            out.push(close(&closed, &self.right[j + 1]) / self.norm_sqr);
        }
        out
    }

    /// Normalized reduced density matrix of sites `i, i+1`, indexed
    /// `(s_i s_{i+1}, s'_i s'_{i+1})`.
    pub fn adjacent_rdm(&self, i: usize) -> Array2<C64> {
        let (a, b) = (self.mps.tensor(i), self.mps.tensor(i + 1));
        let (l, d1, _) = a.dim();
        let (m, d2, r) = b.dim();
        let theta = flat(a, l * d1, m).dot(&flat(b, m, d2 * r));
        let theta = theta.into_shape_with_order((l, d1 * d2, r)).expect("contiguous");
        let renv = &self.right[i + 2];
        let lenv = &self.left[i];
        // ρ[x, x'] = Σ L[b,k] θ[k,x,r] R[r,r'] θ*[b,x',r']
        let ket = lenv.dot(&flat(&theta, l, d1 * d2 * r)); // (b, x r)
        let ket = ket.into_shape_with_order((l * d1 * d2, r)).expect("contiguous").dot(renv);
        let ket = ket.into_shape_with_order((l, d1 * d2, r)).expect("contiguous");
        let mut rho = Array2::zeros((d1 * d2, d1 * d2));
        for bb in 0..l {
            let k = ket.slice(s![bb, .., ..]);
            let t = theta.slice(s![bb, .., ..]).mapv(|z| z.conj());
            rho = rho + k.dot(&t.t());
        }
        rho / C64::new(self.norm_sqr, 0.0)
    }
}

/// Excited-state population of every atom.
pub fn atomic_populations(mps: &Mps, atom_count: usize) -> Vec<f64> {
    let env = Environments::new(mps);
    let p = LocalOperatorSet::new(2).excited_projector();
    (0..atom_count).map(|j| env.local(j, &p).re).collect()
}

/// Von Neumann entropy across bond `bond` (between sites `bond` and
/// `bond + 1`). Moves the canonical center to site `bond`.
pub fn entanglement_entropy(mps: &mut Mps, bond: usize) -> Result<f64> {
    Ok(entropy_of(&schmidt_values(mps, bond)?))
}

/// Normalized Schmidt values across `bond`.
pub fn schmidt_values(mps: &mut Mps, bond: usize) -> Result<Array1<f64>> {
    if bond + 1 >= mps.site_count() {
        return Err(Error::DimensionMismatch(format!("bond {bond} out of range")));
    }
    mps.move_center(bond)?;
    let t = mps.tensor(bond);
    let (l, d, r) = t.dim();
    let (_, s, _) = svd(flat(t, l * d, r))?;
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(if norm > 0.0 { s / norm } else { s })
}

/// `−Σ s² ln s²`, with `0 ln 0 = 0`.
pub fn entropy_of(singular_values: &Array1<f64>) -> f64 {
    singular_values
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

/// `⟨b†_i b_j⟩` over the boson sites (the last `M` sites).
pub fn boson_correlation_matrix(mps: &Mps, mode_count: usize) -> Array2<C64> {
    let env = Environments::new(mps);
    let n = mps.site_count();
    let first = n - mode_count;
    let nf = mps.tensor(first).dim().1;
    let ops = LocalOperatorSet::new(nf);
    let mut out = Array2::zeros((mode_count, mode_count));
    for i in 0..mode_count {
        out[[i, i]] = C64::new(env.local(first + i, &ops.number).re, 0.0);
        let row = env.two_point_row(first + i, &ops.creation, &ops.annihilation, first + i + 1..n);
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            out[[i, j]] = v;
            out[[j, i]] = v.conj();
        }
    }
    out
}

/// `⟨E⁻(x)·E⁺(x)⟩` from a chain-mode correlation matrix, with
/// `E⁺(x) = Σ_k √(ω_k/2) u_k(x) a_k` and `⟨a†a⟩ = Uᵀ⟨b†b⟩U`.
pub fn field_correlation_from_boson(
    boson: &Array2<C64>,
    record: &TransformRecord,
    spec: &SystemSpec,
    positions: &[f64],
) -> Result<Vec<f64>> {
    let m = spec.mode_count();
    let u = record.u();
    if boson.dim() != (m, m) || u.dim() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "correlation {:?} and transform {:?} do not match {m} modes",
            boson.dim(),
            u.dim()
        )));
    }
    let uc = u.mapv(|x| C64::new(x, 0.0));
    let original = uc.t().dot(boson).dot(&uc);
    Ok(positions
        .iter()
        .map(|&x| {
            let c = Array1::from_iter(
                spec.mode_frequencies()
                    .iter()
                    .zip(spec.mode_harmonics())
                    .map(|(w, &n)| C64::new((w / 2.0).sqrt() * pec_mode_profile(n, x), 0.0)),
            );
            c.dot(&original.dot(&c)).re
        })
        .collect())
}

/// Field correlation on a position grid, computed from the MPS.
pub fn field_correlation(
    mps: &Mps,
    record: &TransformRecord,
    spec: &SystemSpec,
    positions: &[f64],
) -> Result<Vec<f64>> {
    let boson = boson_correlation_matrix(mps, spec.mode_count());
    field_correlation_from_boson(&boson, record, spec, positions)
}

/// Reduced density matrix of the first two sites, basis `gg, ge, eg, ee`.
pub fn two_site_rdm(mps: &Mps) -> Result<Array2<C64>> {
    if mps.site_count() < 2 || mps.tensor(0).dim().1 != 2 || mps.tensor(1).dim().1 != 2 {
        return Err(Error::WrongAtomCount { expected: 2, found: 0 });
    }
    Ok(Environments::new(mps).adjacent_rdm(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{HilbertSpaceLayout, StateVector};
    use crate::initial::InitialState;
    use crate::mps::init_product_mps;
    use rand::{Rng, SeedableRng};

    fn random_mps(layout: &HilbertSpaceLayout, seed: u64) -> (Mps, StateVector) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = layout.dimension();
        let v = Array1::from_iter((0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let v = v / C64::new(norm, 0.0);
        let mut mps = Mps::from_dense(layout.dims(), &v).unwrap();
        mps.move_center(1).unwrap();
        (mps, StateVector { layout: layout.clone(), amplitudes: v, time: 0.0 })
    }

    #[test]
    fn psi2_entropy_is_ln2() {
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let mut mps = init_product_mps(&layout, &InitialState::Psi2).unwrap();
        assert!((entanglement_entropy(&mut mps, 0).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!(entanglement_entropy(&mut mps, 1).unwrap() < 1e-14);
        let mut mps = init_product_mps(&layout, &InitialState::Psi3).unwrap();
        for b in 0..4 {
            assert!(entanglement_entropy(&mut mps, b).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_formula() {
        let h = 1.0 / 2f64.sqrt();
        assert!((entropy_of(&ndarray::array![h, h]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy_of(&ndarray::array![1.0, 0.0]), 0.0);
    }

    #[test]
    fn random_state_observables_match_dense() {
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        let (mps, exact) = random_mps(&layout, 7);
        let corr = boson_correlation_matrix(&mps, 3);
        let reference = exact.boson_correlation_matrix();
        let diff = (&corr - &reference).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        let rdm = two_site_rdm(&mps).unwrap();
        let reference = exact.atom_density_matrix();
        let diff = (&rdm - &reference).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        let pops = atomic_populations(&mps, 2);
        for (j, p) in pops.iter().enumerate() {
            assert!((p - exact.atomic_population(j).unwrap()).abs() < 1e-12);
        }
        let comps = exact.two_atom_components().unwrap();
        for (k, c) in comps.iter().enumerate() {
            assert!((rdm[[k, k]].re - c).abs() < 1e-12);
        }
    }

    #[test]
    fn rdm_of_initial_states() {
        let layout = HilbertSpaceLayout::new(2, 2, 3).unwrap();
        let rdm = two_site_rdm(&init_product_mps(&layout, &InitialState::Psi1).unwrap()).unwrap();
        for (i, j, v) in [(0, 0, 0.5), (3, 3, 0.5), (0, 3, 0.5), (3, 0, 0.5), (1, 1, 0.0), (0, 1, 0.0)] {
            assert!((rdm[[i, j]] - C64::new(v, 0.0)).norm() < 1e-14);
        }
        let rdm = two_site_rdm(&init_product_mps(&layout, &InitialState::Psi3).unwrap()).unwrap();
        assert!(rdm.iter().all(|z| (z - C64::new(0.25, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn single_boson_correlation() {
        let layout = HilbertSpaceLayout::new(1, 3, 3).unwrap();
        let e = |d: usize, k: usize| {
            let mut v = Array1::zeros(d);
            v[k] = C64::new(1.0, 0.0);
            v
        };
        let mps = Mps::product(&[e(2, 0), e(3, 0), e(3, 1), e(3, 0)]).unwrap();
        let corr = boson_correlation_matrix(&mps, layout.mode_count());
        for ((i, j), z) in corr.indexed_iter() {
            let expect = if i == 1 && j == 1 { 1.0 } else { 0.0 };
            assert!((z - C64::new(expect, 0.0)).norm() < 1e-14);
        }
        let vacuum = Mps::product(&[e(2, 1), e(3, 0), e(3, 0), e(3, 0)]).unwrap();
        assert!(boson_correlation_matrix(&vacuum, 3).iter().all(|z| z.norm() == 0.0));
    }
}
