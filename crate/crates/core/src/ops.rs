//! Elementary operators on single subsystems and their composition.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::layout::{MODE, QUBIT};
use crate::{Error, HilbertLayout, Operator, QuantumState, Result, C64};

/// Annihilation and creation operators on a truncated Fock space labelled `mode`.
pub fn fock_ladder(dim: usize) -> Result<(Operator, Operator)> {
    fock_ladder_on(MODE, dim)
}

pub fn fock_ladder_on(label: &str, dim: usize) -> Result<(Operator, Operator)> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let layout = HilbertLayout::single(label, dim)?;
    let mut b = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        b[(n - 1, n)] = C64::from(Float::sqrt(n as f64));
    }
    let b = Operator::new(layout, b)?;
    let bd = b.dagger();
    Ok((b, bd))
}

/// Pauli operators on a two-level `qubit`, with `σz|g⟩ = −|g⟩`.
#[derive(Debug, Clone)]
pub struct PauliSet {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    /// `|e⟩⟨g|`
    pub plus: Operator,
    /// `|g⟩⟨e|`
    pub minus: Operator,
}

pub fn pauli_set() -> PauliSet {
    let l = HilbertLayout::single(QUBIT, 2).expect("two-level layout");
    let m = |v: [C64; 4]| Operator::new(l.clone(), DMatrix::from_row_slice(2, 2, &v)).expect("2x2");
    let (o, i, r) = (C64::from(0.0), C64::i(), C64::from(1.0));
    PauliSet {
        x: m([o, r, r, o]),
        y: m([o, i, -i, o]),
        z: m([-r, o, o, r]),
        plus: m([o, o, r, o]),
        minus: m([o, r, o, o]),
    }
}

/// Kronecker product in the listed order.
pub fn tensor(factors: &[&Operator]) -> Result<Operator> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyTensor)?;
    let mut layout = first.layout().clone();
    let mut m = first.matrix().clone();
    for f in rest {
        layout = layout.concat(f.layout())?;
        m = m.kronecker(f.matrix());
    }
    Operator::new(layout, m)
}

/// `op` acting on subsystem `target` of `layout`, identity elsewhere.
pub fn embed(op: &Operator, target: &str, layout: &HilbertLayout) -> Result<Operator> {
    let idx = layout.index_of(target).ok_or_else(|| Error::UnknownSubsystem(target.into()))?;
    let subs = layout.subsystems();
    if op.dim() != subs[idx].dim {
        return Err(Error::DimensionMismatch { expected: subs[idx].dim, found: op.dim() });
    }
    let outer: usize = subs[..idx].iter().map(|s| s.dim).product();
    let inner: usize = subs[idx + 1..].iter().map(|s| s.dim).product();
    let m = DMatrix::<C64>::identity(outer, outer)
        .kronecker(op.matrix())
        .kronecker(&DMatrix::<C64>::identity(inner, inner));
    Operator::new(layout.clone(), m)
}

/// Non-fatal note that a displacement is large for its Fock truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationWarning {
    pub amplitude_sq: f64,
    pub dim: usize,
}

impl TruncationWarning {
    pub fn message(&self) -> String {
        format!(
            "|alpha|^2 = {:.4} exceeds dim/4 = {:.2}; Fock truncation may be inaccurate",
            self.amplitude_sq,
            self.dim as f64 / 4.0
        )
    }
}

#[derive(Debug, Clone)]
pub struct Displacement {
    pub operator: Operator,
    pub warning: Option<TruncationWarning>,
}

fn truncation_check(alpha: C64, dim: usize) -> Option<TruncationWarning> {
    let a2 = alpha.norm_sqr();
    (a2 > dim as f64 / 4.0).then_some(TruncationWarning { amplitude_sq: a2, dim })
}

/// `D(α) = exp(α b† − α* b)` on a `mode` of dimension `dim`.
pub fn displacement(alpha: C64, dim: usize) -> Result<Displacement> {
    let (b, bd) = fock_ladder(dim)?;
    let gen = &bd * alpha - &b * alpha.conj();
    Ok(Displacement { operator: gen.expm(), warning: truncation_check(alpha, dim) })
}

/// `D(α)|0⟩`, renormalized after truncation.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<(QuantumState, Option<TruncationWarning>)> {
    let d = displacement(alpha, dim)?;
    let col: DVector<C64> = d.operator.matrix().column(0).into_owned();
    let state = QuantumState::pure_normalized(d.operator.layout().clone(), col)?;
    Ok((state, d.warning))
}

/// `b†b` on a `mode` of dimension `dim`.
pub fn number(dim: usize) -> Result<Operator> {
    number_on(MODE, dim)
}

/// Exact `diag(0, 1, …, dim − 1)` on subsystem `label`.
pub fn number_on(label: &str, dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let d: Vec<f64> = (0..dim).map(|k| k as f64).collect();
    Operator::diagonal(&HilbertLayout::single(label, dim)?, &d)
}

/// Diagonal projector `|k⟩⟨k|` on a single subsystem.
pub fn projector(label: &str, dim: usize, k: usize) -> Result<Operator> {
    let l = HilbertLayout::single(label, dim)?;
    let mut d: Vec<f64> = alloc::vec![0.0; dim];
    *d.get_mut(k).ok_or(Error::InvalidDimension(k))? = 1.0;
    Operator::diagonal(&l, &d)
}
