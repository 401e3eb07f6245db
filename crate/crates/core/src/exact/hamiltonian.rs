use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::layout::HilbertSpaceLayout;
use super::operators::LocalOperatorSet;
use crate::error::{Error, Result};
use crate::model::{BandCouplingMatrix, SystemSpec};

/// A product of single-site operators with a coefficient.
#[derive(Clone, Debug)]
pub struct Term {
    pub coefficient: f64,
    /// `(site, operator)` pairs on distinct sites.
    pub factors: Vec<(usize, Array2<C64>)>,
}

/// Compressed sparse rows.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub dim: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let lo = self.indptr[r];
            let hi = self.indptr[r + 1];
            let mut acc = C64::new(0.0, 0.0);
            for (c, v) in self.indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                acc += v * x[*c as usize];
            }
            *out = acc;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        match self.indices[lo..hi].binary_search(&(c as u32)) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `max |A - A†|`
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for idx in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[idx] as usize;
                worst = worst.max((self.values[idx] - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            for idx in self.indptr[r]..self.indptr[r + 1] {
                a[[r, self.indices[idx] as usize]] = self.values[idx];
            }
        }
        a
    }
}

/// Sum of local product terms over a [`HilbertSpaceLayout`].
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    layout: HilbertSpaceLayout,
    terms: Vec<Term>,
    matrix: CsrMatrix,
}

impl SparseHamiltonian {
    /// Compiles the terms to CSR and checks Hermiticity to 1e-12.
    pub fn new(layout: HilbertSpaceLayout, terms: Vec<Term>) -> Result<Self> {
        let matrix = compile(&layout, &terms);
        let residual = matrix.hermitian_residual();
        if residual > 1e-12 {
            return Err(Error::NotHermitian { residual });
        }
        Ok(SparseHamiltonian { layout, terms, matrix })
    }

    pub fn layout(&self) -> &HilbertSpaceLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.layout.dimension()
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.matvec_into(x, y)
    }

    /// `⟨ψ|H|ψ⟩` (real part; the imaginary part vanishes for Hermitian `H`).
    pub fn expectation(&self, psi: &Array1<C64>) -> f64 {
        let mut h_psi = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply(psi.as_slice().expect("contiguous state"), &mut h_psi);
        psi.iter().zip(&h_psi).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// Column-by-column assembly. For Hermitian `H` the columns of `H` are the
/// conjugated rows, so each column is written as a row of `H` directly.
fn compile(layout: &HilbertSpaceLayout, terms: &[Term]) -> CsrMatrix {
    // per factor: for each local column, the nonzero (row, value) pairs
    type Sparse = Vec<Vec<(usize, C64)>>;
    let compiled: Vec<(f64, Vec<(usize, Sparse)>)> = terms
        .iter()
        .filter(|t| t.coefficient != 0.0)
        .map(|t| {
            let factors = t
                .factors
                .iter()
                .map(|(site, op)| {
                    let cols = (0..op.ncols())
                        .map(|c| {
                            (0..op.nrows())
                                .filter(|&r| op[[r, c]] != C64::new(0.0, 0.0))
                                .map(|r| (r, op[[r, c]]))
                                .collect()
                        })
                        .collect();
                    (*site, cols)
                })
                .collect();
            (t.coefficient, factors)
        })
        .collect();

    let dim = layout.dimension();
    let mut indptr = Vec::with_capacity(dim + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    let mut column: Vec<(usize, C64)> = Vec::new();
    let mut frontier: Vec<(usize, C64)> = Vec::new();
    let mut next: Vec<(usize, C64)> = Vec::new();
    for c in 0..dim {
        column.clear();
        for (coef, factors) in &compiled {
            frontier.clear();
            frontier.push((c, C64::new(*coef, 0.0)));
            for (site, cols) in factors {
                next.clear();
                let stride = layout.stride(*site);
                for &(idx, amp) in &frontier {
                    let d = layout.digit(idx, *site);
                    let base = idx - d * stride;
                    for &(r, v) in &cols[d] {
                        next.push((base + r * stride, amp * v));
                    }
                }
                std::mem::swap(&mut frontier, &mut next);
            }
            column.extend_from_slice(&frontier);
        }
        column.sort_unstable_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(r, v) in &column {
            // entry (r, c) of H is entry (c, r) of H† = H, conjugated
            let v = v.conj();
            if last == Some(r) {
                *values.last_mut().expect("entry present") += v;
            } else {
                indices.push(r as u32);
                values.push(v);
                last = Some(r);
            }
        }
        indptr.push(values.len());
    }
    CsrMatrix { dim, indptr, indices, values }
}

fn check_layout(layout: &HilbertSpaceLayout, atoms: usize, modes: usize) -> Result<()> {
    if layout.atom_count() != atoms || layout.mode_count() != modes {
        return Err(Error::DimensionMismatch(format!(
            "layout has {}+{} sites, system has {atoms}+{modes}",
            layout.atom_count(),
            layout.mode_count()
        )));
    }
    Ok(())
}

/// `H = Σ_j (ω_j/2) σᶻ_j + Σ_k [ω_k a†a − i Σ_j g_jk σˣ_j (a_k − a†_k)]`
pub fn build_dicke_hamiltonian(
    spec: &SystemSpec,
    layout: &HilbertSpaceLayout,
) -> Result<SparseHamiltonian> {
    let na = spec.atom_count();
    let m = spec.mode_count();
    check_layout(layout, na, m)?;
    let ops = LocalOperatorSet::new(layout.fock_cutoff());
    let mut terms = Vec::new();
    for (j, &w) in spec.atom_frequencies().iter().enumerate() {
        terms.push(Term { coefficient: 0.5 * w, factors: vec![(j, ops.sigma_z.clone())] });
    }
    for (k, &w) in spec.mode_frequencies().iter().enumerate() {
        let site = layout.boson_site(k);
        terms.push(Term { coefficient: w, factors: vec![(site, ops.number.clone())] });
        for j in 0..na {
            terms.push(Term {
                coefficient: spec.coupling()[[j, k]],
                factors: vec![(j, ops.sigma_x.clone()), (site, ops.quadrature.clone())],
            });
        }
    }
    SparseHamiltonian::new(layout.clone(), terms)
}

/// Terms of the band Hamiltonian, in a fixed order shared with the TEBD gate
/// builder.
pub(crate) fn band_terms(band: &BandCouplingMatrix, ops: &LocalOperatorSet) -> Vec<Term> {
    let na = band.atom_count();
    let m = band.mode_count();
    let mut terms = Vec::new();
    for j in 0..na {
        terms.push(Term {
            coefficient: 0.5 * band.atom_frequency(j),
            factors: vec![(j, ops.sigma_z.clone())],
        });
        for k in 0..m {
            // above the diagonal only when the reduction was skipped (M ≤ N_a)
            if k > j && band.rho(j, k) == 0.0 {
                continue;
            }
            terms.push(Term {
                coefficient: band.rho(j, k),
                factors: vec![(j, ops.sigma_x.clone()), (na + k, ops.quadrature.clone())],
            });
        }
    }
    for k in 0..m {
        terms.push(Term { coefficient: band.xi(k), factors: vec![(na + k, ops.number.clone())] });
        for d in 1..=na {
            if k + d >= m {
                break;
            }
            let t = band.hopping(k, k + d);
            terms.push(Term {
                coefficient: t,
                factors: vec![(na + k, ops.creation.clone()), (na + k + d, ops.annihilation.clone())],
            });
            terms.push(Term {
                coefficient: t,
                factors: vec![(na + k, ops.annihilation.clone()), (na + k + d, ops.creation.clone())],
            });
        }
    }
    terms
}

/// `H_B = Σ_j [(ω_j/2)σᶻ_j − i Σ_{k≤j} ρ_jk σˣ_j (b_k − b†_k)]
///      + Σ_k [ξ_k b†_k b_k + Σ_{d=1..N_a} t_{k,k+d} (b†_k b_{k+d} + h.c.)]`
pub fn build_band_hamiltonian(
    band: &BandCouplingMatrix,
    layout: &HilbertSpaceLayout,
) -> Result<SparseHamiltonian> {
    check_layout(layout, band.atom_count(), band.mode_count())?;
    let ops = LocalOperatorSet::new(layout.fock_cutoff());
    SparseHamiltonian::new(layout.clone(), band_terms(band, &ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        assemble_dicke_matrix, build_pec_cavity_spec, CouplingNormalization, HarmonicRule,
    };
    use crate::transform::band_reduce;
    use ndarray::array;
    use ndarray_linalg::{EigValsh, UPLO};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn decoupled_spectrum() {
        let spec = SystemSpec::from_couplings(vec![1.0], vec![1.3], array![[0.0]]).unwrap();
        let layout = HilbertSpaceLayout::new(1, 1, 4).unwrap();
        let h = build_dicke_hamiltonian(&spec, &layout).unwrap();
        let mut e = h.matrix().to_dense().eigvalsh(UPLO::Lower).unwrap().to_vec();
        e.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = [-0.5, 0.5]
            .iter()
            .flat_map(|s| (0..4).map(move |n| s + 1.3 * n as f64))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn rabi_four_by_four() {
        // basis |g0⟩,|g1⟩,|e0⟩,|e1⟩; H = σᶻ/2 + a†a + g σˣ (−i)(a − a†)
        let g = 0.1;
        let spec = SystemSpec::from_couplings(vec![1.0], vec![1.0], array![[g]]).unwrap();
        let layout = HilbertSpaceLayout::new(1, 1, 2).unwrap();
        let h = build_dicke_hamiltonian(&spec, &layout).unwrap().matrix().to_dense();
        // (−i)(a − a†) on {|0⟩,|1⟩} = [[0, −i], [i, 0]]
        let expected = array![
            [c(-0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -g)],
            [c(0.0, 0.0), c(0.5, 0.0), c(0.0, g), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, -g), c(0.5, 0.0), c(0.0, 0.0)],
            [c(0.0, g), c(0.0, 0.0), c(0.0, 0.0), c(1.5, 0.0)],
        ];
        for (x, y) in h.iter().zip(expected.iter()) {
            assert!((x - y).norm() < 1e-15, "{h}");
        }
    }

    #[test]
    fn fig5_hermitian() {
        let spec = build_pec_cavity_spec(
            &[0.0, 0.25, -0.375],
            5,
            HarmonicRule::All,
            CouplingNormalization::AnchorPair { atom: 0, mode: 0, target: 0.25 },
        )
        .unwrap();
        let layout = HilbertSpaceLayout::new(3, 5, 3).unwrap();
        let hd = build_dicke_hamiltonian(&spec, &layout).unwrap();
        assert!(hd.matrix().hermitian_residual() <= 1e-12);
        let (band, _) = band_reduce(&assemble_dicke_matrix(&spec));
        let hb = build_band_hamiltonian(&band, &layout).unwrap();
        assert!(hb.matrix().hermitian_residual() <= 1e-12);
    }

    #[test]
    fn band_chain_without_hopping() {
        // ρ on one site, t ≡ 0: one Rabi pair plus free oscillators
        let mut data = Array2::zeros((3, 3));
        data[[0, 0]] = 1.0;
        data[[0, 1]] = 0.2;
        data[[1, 0]] = 0.2;
        data[[1, 1]] = 1.5;
        data[[2, 2]] = 2.5;
        let band = BandCouplingMatrix::from_matrix(data, 1);
        let layout = HilbertSpaceLayout::new(1, 2, 3).unwrap();
        let h = build_band_hamiltonian(&band, &layout).unwrap();
        let dense = h.matrix().to_dense();
        // no matrix element changes the second boson's occupation
        for r in 0..layout.dimension() {
            for col in 0..layout.dimension() {
                if dense[[r, col]].norm() > 0.0 {
                    assert_eq!(layout.digit(r, 2), layout.digit(col, 2));
                }
            }
        }
    }

    #[test]
    fn layout_mismatch_rejected() {
        let spec = SystemSpec::from_couplings(vec![1.0], vec![1.0], array![[0.1]]).unwrap();
        let layout = HilbertSpaceLayout::new(2, 1, 2).unwrap();
        assert!(build_dicke_hamiltonian(&spec, &layout).is_err());
    }
}
