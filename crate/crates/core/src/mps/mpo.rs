use ndarray::{Array2, Array4, ArrayD, IxDyn};
use num_complex::Complex64 as C64;

use super::linalg::block_svd;
use crate::error::{Error, Result};

/// Gate as a matrix product operator. Tensors are indexed
/// `(left bond, out, in, right bond)`.
#[derive(Clone, Debug)]
pub struct GateMPO {
    pub start: usize,
    pub dims: Vec<usize>,
    pub tensors: Vec<Array4<C64>>,
}

impl GateMPO {
    pub fn span(&self) -> usize {
        self.dims.len()
    }

    /// Internal bond dimensions (`span - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.span() - 1].iter().map(|w| w.dim().3).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Dense operator rebuilt from the tensors.
    pub fn recontract(&self) -> Array2<C64> {
        let mut acc = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for w in &self.tensors {
            let (b, o, i, r) = w.dim();
            let mat = w.to_owned().into_shape_with_order((b, o * i * r)).expect("contiguous");
            let rows = acc.nrows();
            acc = acc.dot(&mat).into_shape_with_order((rows * o * i, r)).expect("contiguous");
        }
        let n = self.span();
        let paired: Vec<usize> = self.dims.iter().flat_map(|&d| [d, d]).collect();
        let t = acc.into_shape_with_order(IxDyn(&paired)).expect("contiguous");
        // (o1, i1, o2, i2, …) → (o1, o2, …, i1, i2, …)
        let perm: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
        let dim: usize = self.dims.iter().product();
        t.permuted_axes(perm)
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((dim, dim))
            .expect("contiguous")
    }
}

/// Upper bound on each internal MPO bond from the operator dimensions on
/// either side of the cut.
pub fn dimension_bond_bound(dims: &[usize]) -> Vec<usize> {
    (1..dims.len())
        .map(|cut| {
            let left: usize = dims[..cut].iter().map(|d| d * d).product();
            let right: usize = dims[cut..].iter().map(|d| d * d).product();
            left.min(right)
        })
        .collect()
}

/// Largest MPO bond of an `(N_a + 1)`-site boson gate: `N_f^{N_a}` for even
/// `N_a`, `N_f^{N_a+1}` for odd `N_a`.
pub fn boson_gate_bond_bound(fock_cutoff: usize, atom_count: usize) -> usize {
    let exponent = if atom_count % 2 == 0 { atom_count } else { atom_count + 1 };
    fock_cutoff.pow(exponent as u32)
}

/// Sequential SVD of a dense gate into per-site MPO tensors. Operator
/// Schmidt values below `1e-14` of the local norm are dropped.
pub fn decompose_gate_to_mpo(gate: &Array2<C64>, start: usize, dims: &[usize]) -> Result<GateMPO> {
    let dim: usize = dims.iter().product();
    if dims.is_empty() || gate.dim() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "gate of shape {:?} does not match site dims {dims:?}",
            gate.dim()
        )));
    }
    let n = dims.len();
    let axes: Vec<usize> = dims.iter().chain(dims.iter()).copied().collect();
    let t: ArrayD<C64> = gate
        .to_owned()
        .into_shape_with_order(IxDyn(&axes))
        .expect("contiguous");
    // (o1, …, on, i1, …, in) → (o1, i1, o2, i2, …)
    let perm: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let flat: Vec<C64> = t.permuted_axes(perm).as_standard_layout().iter().copied().collect();

    let mut tensors = Vec::with_capacity(n);
    let mut rest = Array2::from_shape_vec((1, flat.len()), flat).expect("sized");
    let mut bond = 1;
    for &d in &dims[..n - 1] {
        let cols = rest.len() / (bond * d * d);
        let mat = rest.into_shape_with_order((bond * d * d, cols)).expect("contiguous");
        let scale = mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let (u, s, vt) = block_svd(&mat, 1e-14 * scale)?;
        let k = s.len().max(1);
        let (u, s, vt) = if s.is_empty() {
            (Array2::zeros((bond * d * d, 1)), ndarray::Array1::zeros(1), Array2::zeros((1, cols)))
        } else {
            (u, s, vt)
        };
        tensors.push(u.into_shape_with_order((bond, d, d, k)).expect("contiguous"));
        rest = &vt * &s.mapv(|x| C64::new(x, 0.0)).insert_axis(ndarray::Axis(1));
        bond = k;
    }
    let d = dims[n - 1];
    tensors.push(rest.into_shape_with_order((bond, d, d, 1)).expect("contiguous"));
    let mpo = GateMPO { start, dims: dims.to_vec(), tensors };
    for (cut, (b, bound)) in mpo.bond_dims().iter().zip(dimension_bond_bound(dims)).enumerate() {
        if *b > bound {
            return Err(Error::InvalidState(format!(
                "MPO bond {cut} has dimension {b} above the bound {bound}"
            )));
        }
    }
    Ok(mpo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::gates::exponentiate_gate;
    use crate::exact::LocalOperatorSet;
    use ndarray::linalg::kron;

    fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_has_unit_bonds() {
        let dims = [2, 3, 4];
        let mpo = decompose_gate_to_mpo(&Array2::eye(24), 0, &dims).unwrap();
        assert_eq!(mpo.bond_dims(), vec![1, 1]);
        assert!(max_diff(&mpo.recontract(), &Array2::eye(24)) < 1e-14);
    }

    #[test]
    fn product_and_entangling_gates() {
        let ops = LocalOperatorSet::new(3);
        let p = kron(&ops.number, &ops.quadrature);
        let mpo = decompose_gate_to_mpo(&p, 2, &[3, 3]).unwrap();
        assert_eq!(mpo.bond_dims(), vec![1]);
        let h = kron(&ops.creation, &ops.annihilation) + kron(&ops.annihilation, &ops.creation);
        let u = exponentiate_gate(&h, 0.4).unwrap();
        let mpo = decompose_gate_to_mpo(&u, 0, &[3, 3]).unwrap();
        assert!(max_diff(&mpo.recontract(), &u) < 1e-12);
        assert!(mpo.max_bond() > 1 && mpo.max_bond() <= 9);
    }

    #[test]
    fn bounds() {
        assert_eq!(boson_gate_bond_bound(8, 2), 64);
        assert_eq!(boson_gate_bond_bound(8, 3), 4096);
        assert_eq!(dimension_bond_bound(&[8, 8, 8]), vec![64, 64]);
        assert_eq!(dimension_bond_bound(&[8, 8, 8, 8]), vec![64, 4096, 64]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(decompose_gate_to_mpo(&Array2::eye(5), 0, &[2, 2]).is_err());
    }
}
