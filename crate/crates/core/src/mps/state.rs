use ndarray::{Array1, Array2, Array3, Axis};
use num_complex::Complex64 as C64;

use super::linalg::{adjoint, qr, svd};
use crate::error::{Error, Result};
use crate::exact::HilbertSpaceLayout;
use crate::initial::InitialState;

/// Open-boundary MPS. Site tensors are indexed `(left, physical, right)`.
#[derive(Clone, Debug)]
pub struct Mps {
    tensors: Vec<Array3<C64>>,
    center: usize,
    singular_values: Vec<Array1<f64>>,
}

impl Mps {
    /// Exact MPS of a dense state by successive SVDs, center on the last site.
    /// Schmidt values below `1e-14` of the largest are dropped.
    pub fn from_dense(dims: &[usize], psi: &Array1<C64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || psi.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} does not match dims {dims:?}",
                psi.len()
            )));
        }
        let n = dims.len();
        let mut tensors = Vec::with_capacity(n);
        let mut singular_values = Vec::with_capacity(n - 1);
        let mut rest = psi.clone().into_shape_with_order((1, total)).expect("contiguous");
        let mut left = 1;
        for &d in &dims[..n - 1] {
            let cols = rest.len() / (left * d);
            let mat = rest.into_shape_with_order((left * d, cols)).expect("contiguous");
            let (u, s, vt) = svd(mat)?;
            let smax = s.first().copied().unwrap_or(0.0);
            let keep = s.iter().take_while(|&&x| x > 1e-14 * smax).count().max(1);
            let u = u.slice(ndarray::s![.., ..keep]).to_owned();
            tensors.push(u.into_shape_with_order((left, d, keep)).expect("contiguous"));
            let sk = s.slice(ndarray::s![..keep]).to_owned();
            rest = &vt.slice(ndarray::s![..keep, ..]) * &sk.mapv(|x| C64::new(x, 0.0)).insert_axis(Axis(1));
            singular_values.push(sk);
            left = keep;
        }
        let d = dims[n - 1];
        tensors.push(rest.into_shape_with_order((left, d, 1)).expect("contiguous"));
        Ok(Mps { tensors, center: n - 1, singular_values })
    }

    /// Product state from per-site vectors.
    pub fn product(locals: &[Array1<C64>]) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::DimensionMismatch("empty product state".into()));
        }
        let tensors: Vec<_> = locals
            .iter()
            .map(|v| v.clone().into_shape_with_order((1, v.len(), 1)).expect("contiguous"))
            .collect();
        let singular_values = vec![Array1::ones(1); locals.len() - 1];
        let mut mps = Mps { tensors, center: 0, singular_values };
        mps.canonicalize()?;
        Ok(mps)
    }

    /// Re-establishes canonical form around the current center by sweeping
    /// in from both ends.
    pub fn canonicalize(&mut self) -> Result<()> {
        let c = self.center;
        self.center = 0;
        self.move_center(self.site_count() - 1)?;
        self.move_center(c)
    }

    pub fn site_count(&self) -> usize {
        self.tensors.len()
    }

    pub fn physical_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dim().1).collect()
    }

    /// Bond dimensions between neighbouring sites (`site_count - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.site_count() - 1].iter().map(|t| t.dim().2).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn tensor(&self, site: usize) -> &Array3<C64> {
        &self.tensors[site]
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        &self.tensors
    }

    /// Singular values recorded the last time bond `bond` was split.
    pub fn bond_singular_values(&self, bond: usize) -> &Array1<f64> {
        &self.singular_values[bond]
    }

    pub(crate) fn set_tensor(&mut self, site: usize, t: Array3<C64>) {
        self.tensors[site] = t;
    }

    pub(crate) fn set_bond(&mut self, bond: usize, s: Array1<f64>) {
        self.singular_values[bond] = s;
    }

    pub(crate) fn set_center(&mut self, c: usize) {
        self.center = c;
    }

    /// `‖ψ‖`, read off the center tensor.
    pub fn norm(&self) -> f64 {
        self.tensors[self.center].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Moves the orthogonality center with QR sweeps.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        if target >= self.site_count() {
            return Err(Error::DimensionMismatch(format!("site {target} out of range")));
        }
        while self.center < target {
            let c = self.center;
            let (l, d, r) = self.tensors[c].dim();
            let mat = self.tensors[c].to_owned().into_shape_with_order((l * d, r)).expect("contiguous");
            let (q, rr) = qr(&mat)?;
            let k = q.ncols();
            self.tensors[c] = q.into_shape_with_order((l, d, k)).expect("contiguous");
            let (_, d2, r2) = self.tensors[c + 1].dim();
            let next = self.tensors[c + 1].to_owned().into_shape_with_order((r, d2 * r2)).expect("contiguous");
            self.tensors[c + 1] = rr.dot(&next).into_shape_with_order((k, d2, r2)).expect("contiguous");
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            let (l, d, r) = self.tensors[c].dim();
            let mat = self.tensors[c].to_owned().into_shape_with_order((l, d * r)).expect("contiguous");
            // LQ through the QR of the adjoint
            let (q, rr) = qr(&adjoint(&mat))?;
            let k = q.ncols();
            self.tensors[c] = adjoint(&q).into_shape_with_order((k, d, r)).expect("contiguous");
            let (l0, d0, _) = self.tensors[c - 1].dim();
            let prev = self.tensors[c - 1].to_owned().into_shape_with_order((l0 * d0, l)).expect("contiguous");
            self.tensors[c - 1] = prev.dot(&adjoint(&rr)).into_shape_with_order((l0, d0, k)).expect("contiguous");
            self.center -= 1;
        }
        Ok(())
    }

    /// Largest deviation from the isometry conditions around the center.
    pub fn isometry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, t) in self.tensors.iter().enumerate() {
            let (l, d, r) = t.dim();
            let gram = if i < self.center {
                let m = t.to_owned().into_shape_with_order((l * d, r)).expect("contiguous");
                adjoint(&m).dot(&m)
            } else if i > self.center {
                let m = t.to_owned().into_shape_with_order((l, d * r)).expect("contiguous");
                m.dot(&adjoint(&m))
            } else {
                continue;
            };
            for ((a, b), z) in gram.indexed_iter() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((z - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Full contraction into a dense vector (big-endian site order).
    pub fn to_dense(&self) -> Array1<C64> {
        let mut acc = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for t in &self.tensors {
            let (l, d, r) = t.dim();
            let m = t.to_owned().into_shape_with_order((l, d * r)).expect("contiguous");
            let rows = acc.nrows();
            acc = acc.dot(&m).into_shape_with_order((rows * d, r)).expect("contiguous");
        }
        acc.into_shape_with_order(self.tensors.iter().map(|t| t.dim().1).product::<usize>())
            .expect("contiguous")
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for (i, t) in self.tensors.iter().enumerate() {
            if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(format!("MPS tensor at site {i}")));
            }
        }
        Ok(())
    }
}

/// Atom register in `initial`, every boson in `|0⟩`.
pub fn init_product_mps(layout: &HilbertSpaceLayout, initial: &InitialState) -> Result<Mps> {
    let na = layout.atom_count();
    let atoms = initial.atom_amplitudes(na)?;
    let vacuum = {
        let mut v = Array1::zeros(layout.fock_cutoff());
        v[0] = C64::new(1.0, 0.0);
        v
    };
    if na == 0 {
        return Mps::product(&vec![vacuum; layout.mode_count()]);
    }
    let register = Mps::from_dense(&vec![2; na], &atoms)?;
    let mut tensors = register.tensors;
    let mut singular_values = register.singular_values;
    for _ in 0..layout.mode_count() {
        singular_values.push(Array1::ones(1));
        tensors.push(vacuum.clone().into_shape_with_order((1, layout.fock_cutoff(), 1)).expect("contiguous"));
    }
    Ok(Mps { tensors, center: na - 1, singular_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::StateVector;

    fn random_state(dims: &[usize], seed: u64) -> Array1<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n: usize = dims.iter().product();
        let v = Array1::from_iter((0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v / C64::new(norm, 0.0)
    }

    #[test]
    fn dense_roundtrip_and_canonical() {
        let dims = [2, 2, 3, 3];
        let psi = random_state(&dims, 1);
        let mut mps = Mps::from_dense(&dims, &psi).unwrap();
        assert!(mps.isometry_residual() < 1e-12);
        assert!((&mps.to_dense() - &psi).iter().all(|z| z.norm() < 1e-12));
        for target in [0, 2, 1, 3] {
            mps.move_center(target).unwrap();
            assert!(mps.isometry_residual() < 1e-12);
            assert!((mps.norm() - 1.0).abs() < 1e-12);
            assert!((&mps.to_dense() - &psi).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn initial_states_match_exact() {
        let layout = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        for (state, bond) in [
            (InitialState::Psi1, 2),
            (InitialState::Psi2, 2),
            (InitialState::Psi3, 1),
            (InitialState::AllExcited, 1),
        ] {
            let mps = init_product_mps(&layout, &state).unwrap();
            assert_eq!(mps.bond_dims(), vec![bond, 1, 1, 1]);
            assert!(mps.isometry_residual() < 1e-12);
            let exact = StateVector::from_initial(&layout, &state).unwrap();
            assert!((&mps.to_dense() - &exact.amplitudes).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn all_excited_three_atoms() {
        let layout = HilbertSpaceLayout::new(3, 2, 4).unwrap();
        let mps = init_product_mps(&layout, &InitialState::AllExcited).unwrap();
        assert_eq!(mps.max_bond_dim(), 1);
        let psi = mps.to_dense();
        let idx = layout.index_of(&[1, 1, 1, 0, 0]);
        assert!((psi[idx] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn unnormalized_custom_rejected() {
        let layout = HilbertSpaceLayout::new(1, 2, 3).unwrap();
        let bad = InitialState::Custom(vec![[1.0, 0.0], [1.0, 0.0]]);
        assert!(init_product_mps(&layout, &bad).is_err());
    }
}
