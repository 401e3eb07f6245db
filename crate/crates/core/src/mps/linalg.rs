use ndarray::{Array1, Array2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, JobSvd, SVDDCInto, QR, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Thin SVD `a = u · diag(s) · vt`, singular values descending.
pub(crate) fn svd(a: Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix handed to SVD".into()));
    }
    let backup = a.clone();
    match a.svddc_into(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        // divide-and-conquer occasionally fails to converge; fall back to QR iteration
        _ => {
            let (u, s, vt) = backup.svd(true, true)?;
            let (u, vt) = (u.expect("requested U"), vt.expect("requested Vt"));
            let k = s.len();
            Ok((
                u.slice(ndarray::s![.., ..k]).to_owned(),
                s,
                vt.slice(ndarray::s![..k, ..]).to_owned(),
            ))
        }
    }
}

/// Thin QR. `q` has `min(m, n)` orthonormal columns.
pub(crate) fn qr(a: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (q, r) = a.qr()?;
    Ok((q, r))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending. The
/// input is copied into column-major order first: for row-major input the
/// LAPACK binding returns conjugated eigenvectors.
pub(crate) fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut f = Array2::zeros(a.dim().f());
    f.assign(a);
    let (w, v) = f.eigh(UPLO::Lower)?;
    Ok((w, v.as_standard_layout().into_owned()))
}

pub(crate) fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().as_standard_layout().mapv(|z| z.conj())
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups `0..n` into connected components of the graph whose edges are
/// `edges`. Components come back sorted by their smallest member.
fn components(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut set = DisjointSet::new(n);
    for (a, b) in edges {
        set.union(a, b);
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = set.find(i);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push(Vec::new());
        }
        out[slot[root]].push(i);
    }
    out
}

/// Square matrix stored as dense diagonal blocks over index subsets.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub dim: usize,
    pub blocks: Vec<(Vec<usize>, Array2<C64>)>,
}

impl BlockMatrix {
    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (idx, b) in &self.blocks {
            for (r, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    out[[i, j]] = b[[r, c]];
                }
            }
        }
        out
    }

    /// `self · x` where `x` has `dim` rows.
    pub fn apply(&self, x: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(x.raw_dim());
        for (idx, b) in &self.blocks {
            if idx.len() == 1 {
                let (i, z) = (idx[0], b[[0, 0]]);
                out.row_mut(i).zip_mut_with(&x.row(i), |o, v| *o = z * v);
                continue;
            }
            let gathered = x.select(Axis(0), idx);
            let y = b.dot(&gathered);
            for (r, &i) in idx.iter().enumerate() {
                out.row_mut(i).assign(&y.row(r));
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(|(i, _)| i.len() * i.len()).sum()
    }
}

/// Splits a square matrix into the diagonal blocks induced by its nonzero
/// pattern.
pub fn block_decompose(a: &Array2<C64>) -> BlockMatrix {
    let n = a.nrows();
    let edges = a
        .indexed_iter()
        .filter(|(_, z)| **z != ZERO)
        .map(|((i, j), _)| (i, j));
    let blocks = components(n, edges)
        .into_iter()
        .map(|idx| {
            let b = a.select(Axis(0), &idx).select(Axis(1), &idx);
            (idx, b)
        })
        .collect();
    BlockMatrix { dim: n, blocks }
}

/// `exp(-i·dt·h)` for Hermitian `h`, block by block.
pub fn hermitian_exp(h: &BlockMatrix, dt: f64) -> Result<BlockMatrix> {
    let blocks = h
        .blocks
        .iter()
        .map(|(idx, b)| {
            let (w, v) = eigh(b)?;
            let phases = w.mapv(|e| C64::from_polar(1.0, -e * dt));
            let vp = &v * &phases.insert_axis(Axis(0));
            Ok((idx.clone(), vp.dot(&adjoint(&v))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockMatrix { dim: h.dim, blocks })
}

/// SVD that exploits a block-sparse nonzero pattern. Singular values are
/// sorted descending across blocks; values at or below `drop_below` are
/// discarded.
pub fn block_svd(
    a: &Array2<C64>,
    drop_below: f64,
) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    let (m, n) = a.dim();
    let edges = a
        .indexed_iter()
        .filter(|(_, z)| **z != ZERO)
        .map(|((i, j), _)| (i, m + j));
    let mut parts: Vec<(f64, Vec<usize>, Array1<C64>, Vec<usize>, Array1<C64>)> = Vec::new();
    for comp in components(m + n, edges) {
        let rows: Vec<usize> = comp.iter().copied().filter(|&i| i < m).collect();
        let cols: Vec<usize> = comp.iter().copied().filter(|&i| i >= m).map(|i| i - m).collect();
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let sub = a.select(Axis(0), &rows).select(Axis(1), &cols);
        let (u, s, vt) = svd(sub)?;
        for (k, &sv) in s.iter().enumerate() {
            if sv > drop_below {
                parts.push((sv, rows.clone(), u.column(k).to_owned(), cols.clone(), vt.row(k).to_owned()));
            }
        }
    }
    parts.sort_by(|x, y| y.0.total_cmp(&x.0));
    let r = parts.len();
    let mut u = Array2::zeros((m, r));
    let mut vt = Array2::zeros((r, n));
    let mut s = Array1::zeros(r);
    for (k, (sv, rows, uc, cols, vr)) in parts.into_iter().enumerate() {
        s[k] = sv;
        for (i, z) in rows.iter().zip(uc.iter()) {
            u[[*i, k]] = *z;
        }
        for (j, z) in cols.iter().zip(vr.iter()) {
            vt[[k, *j]] = *z;
        }
    }
    Ok((u, s, vt))
}

/// Truncated split of `a` into an isometry and a remainder carrying the
/// singular values. With `left_isometry`, `a ≈ iso · rest` and `iso` has
/// orthonormal columns; otherwise `a ≈ rest · iso` and `iso` has orthonormal
/// rows. When the isometry side is the short one the split goes through the
/// eigendecomposition of the Gram matrix; the remainder is the projection of
/// `a`, so no singular value is ever divided by. Returns
/// `(iso, s, rest, discarded)`.
pub(crate) fn truncated_split(
    a: Array2<C64>,
    left_isometry: bool,
    chi_max: usize,
    cutoff: f64,
) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>, f64)> {
    let (m, n) = a.dim();
    let short = if left_isometry { m <= n } else { n <= m };
    if !short {
        let (u, s, vt) = svd(a)?;
        let (keep, dropped) = truncation_rank(&s, chi_max, cutoff);
        let sk = s.slice(ndarray::s![..keep]).to_owned();
        let sc = sk.mapv(|x| C64::new(x, 0.0));
        return Ok(if left_isometry {
            let rest = &vt.slice(ndarray::s![..keep, ..]) * &sc.insert_axis(Axis(1));
            (u.slice(ndarray::s![.., ..keep]).to_owned(), sk, rest, dropped)
        } else {
            let rest = &u.slice(ndarray::s![.., ..keep]) * &sc.insert_axis(Axis(0));
            (vt.slice(ndarray::s![..keep, ..]).to_owned(), sk, rest, dropped)
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix handed to split".into()));
    }
    let gram = if left_isometry { a.dot(&adjoint(&a)) } else { adjoint(&a).dot(&a) };
    let (w, v) = eigh(&gram)?;
    // eigh is ascending
    let s: Array1<f64> = w.iter().rev().map(|x| x.max(0.0).sqrt()).collect();
    let (keep, _) = truncation_rank(&s, chi_max, cutoff);
    let cols: Vec<usize> = (0..keep).map(|k| w.len() - 1 - k).collect();
    let basis = v.select(Axis(1), &cols).as_standard_layout().into_owned();
    let sk = s.slice(ndarray::s![..keep]).to_owned();
    let total: f64 = w.iter().map(|x| x.max(0.0)).sum();
    let dropped = (total - sk.iter().map(|x| x * x).sum::<f64>()).max(0.0);
    Ok(if left_isometry {
        let rest = adjoint(&basis).dot(&a).as_standard_layout().into_owned();
        (basis, sk, rest, dropped)
    } else {
        let rest = a.dot(&basis).as_standard_layout().into_owned();
        (adjoint(&basis), sk, rest, dropped)
    })
}

/// Number of leading singular values kept under a bond cap and a cutoff on
/// the summed squares of the dropped tail. Returns `(kept, discarded)`.
pub(crate) fn truncation_rank(s: &Array1<f64>, chi_max: usize, cutoff: f64) -> (usize, f64) {
    let n = s.len();
    let mut tail = 0.0;
    let mut keep = n;
    while keep > 1 {
        let w = s[keep - 1] * s[keep - 1];
        if tail + w > cutoff {
            break;
        }
        tail += w;
        keep -= 1;
    }
    while keep > chi_max.max(1) {
        tail += s[keep - 1] * s[keep - 1];
        keep -= 1;
    }
    (keep, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn svd_reconstructs() {
        let a = array![[c(1.0), c(2.0), C64::new(0.0, 1.0)], [c(0.5), c(-1.0), c(3.0)]];
        let (u, s, vt) = svd(a.clone()).unwrap();
        let back = (&u * &s.mapv(c).insert_axis(Axis(0))).dot(&vt);
        assert!((&back - &a).iter().all(|z| z.norm() < 1e-13));
        assert!(s[0] >= s[1]);
    }

    #[test]
    fn block_svd_matches_dense() {
        let a = array![
            [c(1.0), c(0.0), c(2.0), c(0.0)],
            [c(0.0), c(3.0), c(0.0), c(0.0)],
            [c(4.0), c(0.0), c(0.5), c(0.0)],
        ];
        let (u, s, vt) = block_svd(&a, 0.0).unwrap();
        let (_, sd, _) = svd(a.clone()).unwrap();
        for (x, y) in s.iter().zip(sd.iter()) {
            assert!((x - y).abs() < 1e-13);
        }
        let back = (&u * &s.mapv(c).insert_axis(Axis(0))).dot(&vt);
        assert!((&back - &a).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn exp_of_diagonal() {
        let h = Array2::from_diag(&array![c(0.0), c(1.0), c(2.0)]);
        let blocks = block_decompose(&h);
        assert_eq!(blocks.blocks.len(), 3);
        let u = hermitian_exp(&blocks, 0.3).unwrap().to_dense();
        for n in 0..3 {
            assert!((u[[n, n]] - C64::from_polar(1.0, -0.3 * n as f64)).norm() < 1e-15);
        }
    }

    #[test]
    fn eigh_vectors_solve_row_major_input() {
        let a = Array2::from_shape_fn((4, 4), |(i, j)| C64::new((i * 3 + j) as f64 % 5.0, (i + 2 * j) as f64 % 3.0));
        let h = &a + &adjoint(&a);
        let (w, v) = eigh(&h).unwrap();
        let r = h.dot(&v) - &v * &w.mapv(|x| C64::new(x, 0.0)).insert_axis(Axis(0));
        assert!(r.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn gram_split_matches_svd() {
        let a = Array2::from_shape_fn((3, 7), |(i, j)| C64::new((i * 3 + j) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0));
        let (_, s_ref, _) = svd(a.clone()).unwrap();
        for left in [true, false] {
            let b = if left { a.clone() } else { a.t().to_owned() };
            let (iso, s, rest, dropped) = truncated_split(b.clone(), left, 10, 0.0).unwrap();
            assert!(dropped < 1e-12);
            for (x, y) in s.iter().zip(&s_ref) {
                assert!((x - y).abs() < 1e-10);
            }
            let back = if left { iso.dot(&rest) } else { rest.dot(&iso) };
            assert!((&back - &b).iter().all(|z| z.norm() < 1e-10));
            let gram = if left { adjoint(&iso).dot(&iso) } else { iso.dot(&adjoint(&iso)) };
            assert!((&gram - &Array2::<C64>::eye(gram.nrows())).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn truncation_rule() {
        let s = array![0.9, 0.4, 1e-3, 1e-6];
        assert_eq!(truncation_rank(&s, 10, 1e-10).0, 3);
        let (k, w) = truncation_rank(&s, 10, 1e-5);
        assert_eq!(k, 2);
        assert!((w - (1e-6 + 1e-12)).abs() < 1e-18);
        assert_eq!(truncation_rank(&s, 1, 0.0).0, 1);
        assert_eq!(truncation_rank(&array![0.0], 4, 0.0).0, 1);
    }
}
