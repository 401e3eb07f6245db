use ndarray::{s, Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::model::{max_asymmetry, BandCouplingMatrix, DickeCouplingMatrix, TransformRecord};

/// One reflector `Q_i = I - 2 v vᵀ / (vᵀ v)` of the band reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseholderStep {
    /// 1-based step index; column `i - 1` (0-based) is the target.
    pub index: usize,
    /// Full-length vector with `N_a + i - 1` leading zeros. `None` marks a
    /// skipped step (nothing to annihilate, reflector is the identity).
    pub vector: Option<Array1<f64>>,
    /// New value of the pivot entry after reflection.
    pub alpha: f64,
}

impl HouseholderStep {
    pub fn is_skip(&self) -> bool {
        self.vector.is_none()
    }

    /// Dense reflector matrix of size `n`.
    pub fn reflector(&self, n: usize) -> Array2<f64> {
        let mut q = Array2::eye(n);
        if let Some(v) = &self.vector {
            let beta = 2.0 / v.dot(v);
            for i in 0..n {
                for j in 0..n {
                    q[[i, j]] -= beta * v[i] * v[j];
                }
            }
        }
        q
    }
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Builds the reflector for step `i` (1-based) from the current intermediate
/// matrix. The step zeroes column `i - 1` below row `N_a + i - 1` (0-based).
pub fn householder_vector(
    intermediate: ArrayView2<'_, f64>,
    i: usize,
    atom_count: usize,
) -> Result<HouseholderStep> {
    let n = intermediate.nrows();
    let pivot = atom_count + i - 1;
    if i == 0 || pivot >= n {
        return Err(Error::DimensionMismatch(format!(
            "step {i} out of range for size {n} with {atom_count} atoms"
        )));
    }
    let col = i - 1;
    let m = intermediate.slice(s![pivot.., col]);
    let tail_norm_sq: f64 = m.iter().skip(1).map(|x| x * x).sum();
    if tail_norm_sq == 0.0 {
        return Ok(HouseholderStep { index: i, vector: None, alpha: m[0] });
    }
    let norm = (m[0] * m[0] + tail_norm_sq).sqrt();
    let alpha = -sgn(m[0]) * norm;
    let mut v = Array1::zeros(n);
    v.slice_mut(s![pivot..]).assign(&m);
    v[pivot] -= alpha;
    Ok(HouseholderStep { index: i, vector: Some(v), alpha })
}

/// Applies `A ← Q_i A Q_iᵀ` as a symmetric rank-2 update and accumulates
/// `Q ← Q_i Q`.
pub fn apply_householder_step(
    step: &HouseholderStep,
    atom_count: usize,
    matrix: &mut Array2<f64>,
    q: &mut Array2<f64>,
) {
    let Some(v) = &step.vector else { return };
    let n = matrix.nrows();
    let lo = atom_count + step.index - 1;
    let vw = v.slice(s![lo..]);
    let beta = 2.0 / vw.dot(&vw);

    // p = β A v ; w = p - (β vᵀp / 2) v ; A ← A - v wᵀ - w vᵀ
    let p: Array1<f64> = matrix.slice(s![.., lo..]).dot(&vw) * beta;
    let k = 0.5 * beta * vw.dot(&p.slice(s![lo..]));
    let mut w = p;
    w.slice_mut(s![lo..]).scaled_add(-k, &vw);
    for r in 0..n {
        for c in lo..n {
            let d = v[c] * w[r] + w[c] * v[r];
            matrix[[r, c]] -= d;
            if r < lo {
                matrix[[c, r]] -= d;
            }
        }
    }

    // pin the annihilated entries and restore exact symmetry of the pivot column
    let col = step.index - 1;
    matrix[[lo, col]] = step.alpha;
    matrix[[col, lo]] = step.alpha;
    for r in lo + 1..n {
        matrix[[r, col]] = 0.0;
        matrix[[col, r]] = 0.0;
    }

    // Q ← (I - β v vᵀ) Q, touching only rows lo..
    let vtq = vw.dot(&q.slice(s![lo.., ..]));
    for r in lo..n {
        let scale = beta * v[r];
        for c in 0..n {
            q[[r, c]] -= scale * vtq[c];
        }
    }
}

/// Reduces a Dicke coupling matrix to bandwidth `N_a` with Householder
/// reflectors acting only on the boson coordinates.
///
/// When `M ≤ N_a` the input is returned unchanged with `Q = I` and
/// [`TransformRecord::is_degenerate`] set.
pub fn band_reduce(dicke: &DickeCouplingMatrix) -> (BandCouplingMatrix, TransformRecord) {
    let na = dicke.atom_count();
    let m = dicke.mode_count();
    let n = dicke.size();
    let mut record = TransformRecord::identity(n, na);
    let mut a = dicke.matrix().to_owned();
    if m <= na {
        record.degenerate = true;
        return (BandCouplingMatrix::from_matrix(a, na), record);
    }

    // Columns 0..M-2 need annihilation below row N_a + i - 1; beyond that the
    // band condition holds trivially.
    for i in 1..m {
        let step = householder_vector(a.view(), i, na).expect("step index within range");
        apply_householder_step(&step, na, &mut a, &mut record.q);
        if let Some(v) = step.vector {
            record.reflectors.push((i, v));
        }
    }
    (BandCouplingMatrix::from_matrix(a, na), record)
}

/// Outcome of [`validate_band_structure`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BandReport {
    /// Largest `|entry|` with `|row - col| > N_a`, relative to the matrix max-abs.
    pub max_outside_band: f64,
    /// Location of that entry.
    pub worst_entry: Option<(usize, usize)>,
    pub max_asymmetry: f64,
    /// Largest off-diagonal magnitude inside the atom block.
    pub atom_block_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks bandwidth, symmetry and the diagonal atom block, each relative to
/// the largest entry of the matrix.
pub fn validate_band_structure(band: &BandCouplingMatrix, tolerance: f64) -> BandReport {
    let a = band.matrix();
    let na = band.atom_count();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut worst = 0.0;
    let mut worst_entry = None;
    for ((r, c), v) in a.indexed_iter() {
        if r.abs_diff(c) > na && v.abs() / scale > worst {
            worst = v.abs() / scale;
            worst_entry = Some((r, c));
        }
    }
    let mut atom_dev = 0.0f64;
    for r in 0..na {
        for c in 0..na {
            if r != c {
                atom_dev = atom_dev.max(a[[r, c]].abs() / scale);
            }
        }
    }
    let asym = max_asymmetry(a) / scale;
    BandReport {
        max_outside_band: worst,
        worst_entry,
        max_asymmetry: asym,
        atom_block_deviation: atom_dev,
        tolerance,
        pass: worst <= tolerance && asym <= tolerance && atom_dev <= tolerance,
    }
}
