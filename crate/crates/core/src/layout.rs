use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

pub const QUBIT: &str = "qubit";
pub const MODE: &str = "mode";
pub const READOUT: &str = "readout";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labelled tensor factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertLayout {
    subsystems: Vec<Subsystem>,
}

impl HilbertLayout {
    /// Labels starting with `qubit` need at least two levels; any other
    /// subsystem needs at least one.
    pub fn new<I, S>(subsystems: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut out: Vec<Subsystem> = Vec::new();
        for (label, dim) in subsystems {
            let label = label.into();
            let min = if label.starts_with(QUBIT) { 2 } else { 1 };
            if dim < min {
                return Err(Error::InvalidDimension(dim));
            }
            if out.iter().any(|s| s.label == label) {
                return Err(Error::InvalidLayout(alloc::format!("duplicate label `{label}`")));
            }
            out.push(Subsystem { label, dim });
        }
        if out.is_empty() {
            return Err(Error::InvalidLayout("no subsystems".to_string()));
        }
        Ok(Self { subsystems: out })
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    /// `(qubit, mode)` or `(qubit, mode, readout)` when `readout_dim` is given.
    pub fn qubit_mode(qubit_levels: usize, fock_dim: usize, readout_dim: Option<usize>) -> Result<Self> {
        match readout_dim {
            Some(r) => Self::new([(QUBIT, qubit_levels), (MODE, fock_dim), (READOUT, r)]),
            None => Self::new([(QUBIT, qubit_levels), (MODE, fock_dim)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    pub fn subsystem_dim(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().find(|s| s.label == label).map(|s| s.dim)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index_of(label).is_some()
    }

    pub fn concat(&self, other: &HilbertLayout) -> Result<Self> {
        Self::new(
            self.subsystems
                .iter()
                .chain(other.subsystems.iter())
                .map(|s| (s.label.clone(), s.dim)),
        )
    }

    /// Row-major flat index of a product basis state.
    pub fn flat_index(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch { expected: self.subsystems.len(), found: indices.len() });
        }
        let mut idx = 0;
        for (s, &i) in self.subsystems.iter().zip(indices) {
            if i >= s.dim {
                return Err(Error::InvalidState(alloc::format!(
                    "level {i} out of range for `{}` (dimension {})",
                    s.label, s.dim
                )));
            }
            idx = idx * s.dim + i;
        }
        Ok(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_product() {
        let l = HilbertLayout::qubit_mode(3, 26, Some(5)).unwrap();
        assert_eq!(l.dim(), 390);
        assert_eq!(l.index_of(READOUT), Some(2));
    }

    #[test]
    fn rejects_duplicates_and_small_qubits() {
        assert!(HilbertLayout::new([("a", 2), ("a", 3)]).is_err());
        assert_eq!(HilbertLayout::single(QUBIT, 1), Err(Error::InvalidDimension(1)));
        assert!(HilbertLayout::single("aux", 1).is_ok());
    }

    #[test]
    fn flat_index_is_row_major() {
        let l = HilbertLayout::qubit_mode(2, 25, None).unwrap();
        assert_eq!(l.flat_index(&[1, 0]).unwrap(), 25);
        assert_eq!(l.flat_index(&[0, 3]).unwrap(), 3);
        assert!(l.flat_index(&[2, 0]).is_err());
    }
}
