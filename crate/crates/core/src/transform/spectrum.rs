use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::model::max_asymmetry;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending.
pub fn symmetric_spectrum(matrix: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{:?} is not square", matrix.dim())));
    }
    let scale = matrix.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let asym = max_asymmetry(matrix);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    let mut a: Array2<f64> = matrix.to_owned();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                // rotation angle zeroing a[p, q] (Rutishauser's stable form)
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = a.diag().to_vec();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal() {
        let e = symmetric_spectrum(array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]].view())
            .unwrap();
        assert_eq!(e, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let e = symmetric_spectrum(array![[0.0, 1.0], [1.0, 0.0]].view()).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(symmetric_spectrum(array![[0.0, 1.0], [0.5, 0.0]].view()).is_err());
    }

    #[test]
    fn path_graph_laplacian() {
        // eigenvalues of the n-site path adjacency are 2cos(kπ/(n+1))
        let n = 12;
        let a = Array2::from_shape_fn((n, n), |(i, j)| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
        let e = symmetric_spectrum(a.view()).unwrap();
        let mut exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        exact.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip(exact.iter()) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
