use ndarray::Array2;
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense single-site operators. Atoms use `{|g⟩, |e⟩}`; bosons use Fock states
/// `|0⟩ … |N_f - 1⟩` with a hard cutoff (`b†|N_f - 1⟩ = 0`).
#[derive(Clone, Debug)]
pub struct LocalOperatorSet {
    pub sigma_x: Array2<C64>,
    pub sigma_z: Array2<C64>,
    /// `|e⟩⟨g|`
    pub sigma_plus: Array2<C64>,
    /// `|g⟩⟨e|`
    pub sigma_minus: Array2<C64>,
    pub annihilation: Array2<C64>,
    pub creation: Array2<C64>,
    pub number: Array2<C64>,
    /// `-i(b - b†)`, the Hermitian quadrature multiplying `σ^x` in the coupling.
    pub quadrature: Array2<C64>,
}

impl LocalOperatorSet {
    pub fn new(fock_cutoff: usize) -> Self {
        let nf = fock_cutoff;
        let mut b = Array2::from_elem((nf, nf), ZERO);
        for n in 1..nf {
            b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
        }
        let bd = b.t().mapv(|z| z.conj());
        let number = Array2::from_diag(&ndarray::Array1::from_iter(
            (0..nf).map(|n| C64::new(n as f64, 0.0)),
        ));
        let quadrature = (&b - &bd).mapv(|z| z * C64::new(0.0, -1.0));
        LocalOperatorSet {
            sigma_x: ndarray::array![[ZERO, ONE], [ONE, ZERO]],
            sigma_z: ndarray::array![[-ONE, ZERO], [ZERO, ONE]],
            sigma_plus: ndarray::array![[ZERO, ZERO], [ONE, ZERO]],
            sigma_minus: ndarray::array![[ZERO, ONE], [ZERO, ZERO]],
            annihilation: b,
            creation: bd,
            number,
            quadrature,
        }
    }

    pub fn fock_cutoff(&self) -> usize {
        self.annihilation.nrows()
    }

    /// `|e⟩⟨e| = σ⁺σ⁻`
    pub fn excited_projector(&self) -> Array2<C64> {
        self.sigma_plus.dot(&self.sigma_minus)
    }
}

pub fn hermitian_residual(a: &Array2<C64>) -> f64 {
    a.indexed_iter()
        .map(|((i, j), z)| (z - a[[j, i]].conj()).norm())
        .fold(0.0, f64::max)
}

/// Kronecker product of complex matrices (first factor most significant).
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::linalg::kron(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_and_number() {
        let ops = LocalOperatorSet::new(5);
        assert_eq!(hermitian_residual(&ops.sigma_x), 0.0);
        assert_eq!(hermitian_residual(&ops.sigma_z), 0.0);
        assert_eq!(hermitian_residual(&ops.quadrature), 0.0);
        let n = ops.creation.dot(&ops.annihilation);
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { i as f64 } else { 0.0 };
                assert!((n[[i, j]] - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn commutator_below_cutoff() {
        let nf = 6;
        let ops = LocalOperatorSet::new(nf);
        let c = ops.annihilation.dot(&ops.creation) - ops.creation.dot(&ops.annihilation);
        for i in 0..nf - 1 {
            assert!((c[[i, i]] - ONE).norm() < 1e-14);
        }
        // truncation boundary defect
        assert!((c[[nf - 1, nf - 1]] - C64::new(-(nf as f64 - 1.0), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn excited_projector() {
        let ops = LocalOperatorSet::new(2);
        let p = ops.excited_projector();
        assert_eq!(p[[1, 1]], ONE);
        assert_eq!(p[[0, 0]], ZERO);
    }
}
