//! Transmon spectrum and transition matrix elements from the charge basis.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::layout::QUBIT;
use crate::{Error, HilbertLayout, Operator, Result};

/// Energies are angular frequencies `E/ħ` (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct TransmonLevels {
    pub ej: f64,
    pub ec: f64,
    pub ng: f64,
    pub charge_cutoff: usize,
    /// Lowest `level_count` eigenvalues, ascending.
    pub energies: Vec<f64>,
    pub omega_01: f64,
    pub omega_12: f64,
    pub anharmonicity: f64,
    /// `⟨i|n̂|j⟩ / ⟨0|n̂|1⟩`, eigenvector signs chosen so that
    /// nearest-neighbour elements are non-negative.
    pub coupling_ratios: DMatrix<f64>,
}

impl TransmonLevels {
    pub fn level_count(&self) -> usize {
        self.energies.len()
    }
}

pub const DEFAULT_CHARGE_CUTOFF: usize = 30;

/// Diagonalizes `4E_C(n − n_g)² − (E_J/2)(|n⟩⟨n+1| + h.c.)` for
/// `n ∈ [−cutoff, cutoff]`.
pub fn transmon_charge_diagonalize(
    ej: f64,
    ec: f64,
    ng: f64,
    charge_cutoff: usize,
    level_count: usize,
) -> Result<TransmonLevels> {
    if charge_cutoff < 10 {
        return Err(Error::InvalidParameters(alloc::format!("charge cutoff {charge_cutoff} < 10")));
    }
    if level_count < 2 || level_count > 2 * charge_cutoff - 1 {
        return Err(Error::InvalidParameters(alloc::format!(
            "level count {level_count} outside [2, {}]",
            2 * charge_cutoff - 1
        )));
    }
    if !(ej > 0.0 && ec > 0.0) || !ng.is_finite() {
        return Err(Error::InvalidParameters("E_J and E_C must be positive".into()));
    }
    let dim = 2 * charge_cutoff + 1;
    let charge = |k: usize| k as f64 - charge_cutoff as f64;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let d = charge(k) - ng;
        h[(k, k)] = 4.0 * ec * d * d;
        if k + 1 < dim {
            h[(k, k + 1)] = -ej / 2.0;
            h[(k + 1, k)] = -ej / 2.0;
        }
    }
    let eig = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or(Error::NonConvergent)?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(level_count);

    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<f64>::zeros(dim, level_count);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    let n_op = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| charge(k)));
    let nv = &n_op * &vecs;
    for c in 1..level_count {
        let elem = vecs.column(c - 1).dot(&nv.column(c));
        if elem < 0.0 {
            vecs.column_mut(c).neg_mut();
        }
    }
    let n_eig = vecs.transpose() * &n_op * &vecs;
    let g01 = n_eig[(0, 1)];
    if g01.abs() < f64::EPSILON {
        return Err(Error::InvalidParameters("vanishing 0-1 charge matrix element".into()));
    }
    let mut ratios = n_eig / g01;
    ratios[(0, 1)] = 1.0;
    ratios[(1, 0)] = 1.0;
    let sym = (&ratios + ratios.transpose()) * 0.5;

    let omega_01 = energies[1] - energies[0];
    let omega_12 = if level_count > 2 { energies[2] - energies[1] } else { f64::NAN };
    Ok(TransmonLevels {
        ej,
        ec,
        ng,
        charge_cutoff,
        omega_01,
        omega_12,
        anharmonicity: omega_12 - omega_01,
        energies,
        coupling_ratios: sym,
    })
}

/// Off-diagonal coupling ratios as an operator on a `qubit` subsystem.
/// The diagonal (longitudinal) elements are dropped.
pub fn transversal_coupling_operator(levels: &TransmonLevels) -> Operator {
    transversal_from_ratios(&levels.coupling_ratios)
}

pub fn transversal_from_ratios(ratios: &DMatrix<f64>) -> Operator {
    let n = ratios.nrows();
    let mut m = ratios.clone();
    m.fill_diagonal(0.0);
    Operator::from_real(HilbertLayout::single(QUBIT, n).expect("qubit layout"), &m).expect("square ratios")
}

/// Harmonic-oscillator ratios `√max(i,j)` for `|i − j| = 1`.
pub fn harmonic_ratios(levels: usize) -> DMatrix<f64> {
    use num_traits::Float;
    DMatrix::from_fn(levels, levels, |i, j| {
        if i.abs_diff(j) == 1 {
            Float::sqrt(i.max(j) as f64)
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz;

    #[test]
    fn paper_transmon_anharmonicity() {
        let ec = ghz(0.31);
        let t = transmon_charge_diagonalize(50.0 * ec, ec, 0.0, DEFAULT_CHARGE_CUTOFF, 3).unwrap();
        let alpha_ghz = t.anharmonicity / ghz(1.0);
        assert!((alpha_ghz + 0.36).abs() / 0.36 < 0.15, "alpha/h = {alpha_ghz}");
        assert!(t.anharmonicity < 0.0);
        assert!((t.coupling_ratios[(1, 2)] - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.05);
        assert_eq!(t.coupling_ratios[(0, 1)], 1.0);
        assert_eq!(t.coupling_ratios[(1, 2)], t.coupling_ratios[(2, 1)]);
    }

    #[test]
    fn offset_charge_insensitive() {
        let ec = ghz(0.31);
        let a = transmon_charge_diagonalize(50.0 * ec, ec, 0.0, 30, 3).unwrap();
        let b = transmon_charge_diagonalize(50.0 * ec, ec, 0.5, 30, 3).unwrap();
        assert!((a.omega_01 - b.omega_01).abs() / a.omega_01 <= 1e-3);
    }

    #[test]
    fn cutoff_converged() {
        let ec = ghz(0.31);
        let a = transmon_charge_diagonalize(50.0 * ec, ec, 0.0, 30, 3).unwrap();
        let b = transmon_charge_diagonalize(50.0 * ec, ec, 0.0, 60, 3).unwrap();
        assert!((a.omega_01 - b.omega_01).abs() / a.omega_01 < 1e-9);
    }

    #[test]
    fn anharmonicity_approaches_minus_ec() {
        let ec = 1.0;
        let mut prev = f64::INFINITY;
        for ratio in [50.0, 100.0, 500.0, 5000.0] {
            let t = transmon_charge_diagonalize(ratio * ec, ec, 0.0, 60, 3).unwrap();
            let dev = (t.anharmonicity + ec).abs();
            assert!(dev < prev, "E_J/E_C = {ratio}: |α + E_C| = {dev}");
            prev = dev;
        }
        assert!(prev < 0.03);
    }

    #[test]
    fn harmonic_limit_ratio() {
        let t = transmon_charge_diagonalize(5000.0, 1.0, 0.0, 60, 3).unwrap();
        assert!((t.coupling_ratios[(1, 2)] - 2f64.sqrt()).abs() < 5e-3);
    }

    #[test]
    fn two_level_operator_is_sigma_x() {
        let t = transmon_charge_diagonalize(50.0, 1.0, 0.0, 30, 2).unwrap();
        let x = transversal_coupling_operator(&t);
        assert_eq!(x, crate::ops::pauli_set().x);
        let h = transversal_from_ratios(&harmonic_ratios(3));
        assert_eq!(h.get(1, 2).re, 2f64.sqrt());
        assert_eq!(h.get(0, 2).re, 0.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(transmon_charge_diagonalize(50.0, 1.0, 0.0, 5, 3).is_err());
        assert!(transmon_charge_diagonalize(50.0, 1.0, 0.0, 10, 20).is_err());
    }
}
