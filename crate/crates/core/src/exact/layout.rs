use crate::error::{Error, Result};

/// Default cap on the full Hilbert-space dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 24;

/// Site ordering `[atom_1 … atom_Na, boson_1 … boson_M]` with a big-endian
/// mixed-radix index (the last boson varies fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpaceLayout {
    atom_count: usize,
    mode_count: usize,
    fock_cutoff: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dimension: usize,
}

impl HilbertSpaceLayout {
    pub fn new(atom_count: usize, mode_count: usize, fock_cutoff: usize) -> Result<Self> {
        Self::with_cap(atom_count, mode_count, fock_cutoff, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(
        atom_count: usize,
        mode_count: usize,
        fock_cutoff: usize,
        cap: usize,
    ) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::InvalidSpec(format!("Fock cutoff {fock_cutoff} must be at least 2")));
        }
        let dims: Vec<usize> = std::iter::repeat(2)
            .take(atom_count)
            .chain(std::iter::repeat(fock_cutoff).take(mode_count))
            .collect();
        let total: u128 = dims.iter().map(|&d| d as u128).product();
        if total > cap as u128 {
            return Err(Error::DimensionTooLarge { dim: total, cap });
        }
        let mut strides = vec![1; dims.len()];
        for s in (0..dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * dims[s + 1];
        }
        Ok(HilbertSpaceLayout {
            atom_count,
            mode_count,
            fock_cutoff,
            dims,
            strides,
            dimension: total as usize,
        })
    }

    /// Site structure without a cap, for tensor-network states whose full
    /// dimension need not fit in memory. `dimension` and strides saturate.
    pub fn sites_only(atom_count: usize, mode_count: usize, fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::InvalidSpec(format!("Fock cutoff {fock_cutoff} must be at least 2")));
        }
        let dims: Vec<usize> = std::iter::repeat(2)
            .take(atom_count)
            .chain(std::iter::repeat(fock_cutoff).take(mode_count))
            .collect();
        let mut strides = vec![1usize; dims.len()];
        for s in (0..dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1].saturating_mul(dims[s + 1]);
        }
        let dimension = dims.iter().fold(1usize, |acc, d| acc.saturating_mul(*d));
        Ok(HilbertSpaceLayout { atom_count, mode_count, fock_cutoff, dims, strides, dimension })
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn site_count(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// Site index of boson `k` (0-based).
    pub fn boson_site(&self, k: usize) -> usize {
        self.atom_count + k
    }

    /// Local state of `site` in basis index `index`.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn digits_of(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|s| self.digit(index, s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_and_bijection() {
        let l = HilbertSpaceLayout::new(2, 3, 3).unwrap();
        assert_eq!(l.dimension(), 4 * 27);
        for i in 0..l.dimension() {
            assert_eq!(l.index_of(&l.digits_of(i)), i);
        }
        assert_eq!(l.digits_of(l.dimension() - 1), vec![1, 1, 2, 2, 2]);
    }

    #[test]
    fn guards() {
        assert!(HilbertSpaceLayout::new(1, 1, 1).is_err());
        assert!(matches!(
            HilbertSpaceLayout::new(2, 30, 8),
            Err(Error::DimensionTooLarge { .. })
        ));
    }
}
