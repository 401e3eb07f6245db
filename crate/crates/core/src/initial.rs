//! Initial atomic states. Bosons always start in the vacuum.
//!
//! Atom basis ordering: local index 0 is `|g⟩`, 1 is `|e⟩`; the atom register
//! index is big-endian, so for two atoms the order is `gg, ge, eg, ee`.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `(|ee⟩ + |gg⟩)/√2`
    Psi1,
    /// `(|eg⟩ + |ge⟩)/√2`
    Psi2,
    /// `(|e⟩ + |g⟩)(|e⟩ + |g⟩)/2`
    Psi3,
    /// Every atom excited.
    AllExcited,
    /// Explicit atom-register amplitudes as `[re, im]` pairs, length `2^N_a`.
    Custom(Vec<[f64; 2]>),
}

impl InitialState {
    /// Amplitudes over the `2^N_a` atom register.
    pub fn atom_amplitudes(&self, atom_count: usize) -> Result<Array1<C64>> {
        let dim = 1usize << atom_count;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let two_atoms = |amps: [f64; 4]| -> Result<Array1<C64>> {
            if atom_count != 2 {
                return Err(Error::WrongAtomCount { expected: 2, found: atom_count });
            }
            Ok(Array1::from_iter(amps.iter().map(|&a| C64::new(a, 0.0))))
        };
        match self {
            InitialState::Psi1 => two_atoms([h, 0.0, 0.0, h]),
            InitialState::Psi2 => two_atoms([0.0, h, h, 0.0]),
            InitialState::Psi3 => two_atoms([0.5; 4]),
            InitialState::AllExcited => {
                let mut v = Array1::zeros(dim);
                v[dim - 1] = C64::new(1.0, 0.0);
                Ok(v)
            }
            InitialState::Custom(amps) => {
                if amps.len() != dim {
                    return Err(Error::InvalidState(format!(
                        "{} amplitudes given for {atom_count} atoms",
                        amps.len()
                    )));
                }
                let v = Array1::from_iter(amps.iter().map(|[re, im]| C64::new(*re, *im)));
                let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidState(format!(
                        "custom amplitudes have norm {norm}, expected 1"
                    )));
                }
                Ok(v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_states_normalized() {
        for s in [InitialState::Psi1, InitialState::Psi2, InitialState::Psi3] {
            let v = s.atom_amplitudes(2).unwrap();
            let n: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-15);
        }
        let v = InitialState::AllExcited.atom_amplitudes(3).unwrap();
        assert_eq!(v[7], C64::new(1.0, 0.0));
    }

    #[test]
    fn two_atom_states_need_two_atoms() {
        assert!(InitialState::Psi1.atom_amplitudes(3).is_err());
    }

    #[test]
    fn custom_must_be_normalized() {
        let bad = InitialState::Custom(vec![[1.0, 0.0], [1.0, 0.0]]);
        assert!(bad.atom_amplitudes(1).is_err());
        let good = InitialState::Custom(vec![[0.6, 0.0], [0.0, 0.8]]);
        assert!(good.atom_amplitudes(1).is_ok());
    }
}
