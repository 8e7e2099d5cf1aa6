use alloc::format;

use nalgebra::{DMatrix, DVector};

use crate::{Error, HilbertLayout, Operator, Result, C64};

pub const PURE_NORM_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: HilbertLayout,
    repr: Representation,
}

/// Named single-qubit preparations. `Plus`/`Minus` are `(|e⟩ ± |g⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitPreparation {
    Ground,
    Excited,
    Plus,
    Minus,
}

impl QubitPreparation {
    /// Amplitudes on a qubit with `levels` levels.
    pub fn amplitudes(self, levels: usize) -> DVector<C64> {
        let mut v = DVector::zeros(levels);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::Ground => v[0] = C64::from(1.0),
            Self::Excited => v[1] = C64::from(1.0),
            Self::Plus => {
                v[0] = C64::from(h);
                v[1] = C64::from(h);
            }
            Self::Minus => {
                v[0] = C64::from(-h);
                v[1] = C64::from(h);
            }
        }
        v
    }
}

impl QuantumState {
    pub fn pure(layout: HilbertLayout, amplitudes: DVector<C64>) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::InvalidState(format!("state norm² is {n2}")));
        }
        Ok(Self { layout, repr: Representation::Pure(amplitudes) })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn pure_normalized(layout: HilbertLayout, amplitudes: DVector<C64>) -> Result<Self> {
        check_len(&layout, amplitudes.len())?;
        let n = amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize a vector of norm {n}")));
        }
        Ok(Self { layout, repr: Representation::Pure(amplitudes / C64::from(n)) })
    }

    pub fn mixed(layout: HilbertLayout, rho: DMatrix<C64>) -> Result<Self> {
        check_len(&layout, rho.nrows())?;
        check_len(&layout, rho.ncols())?;
        let tr = rho.trace();
        if (tr - C64::from(1.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("density matrix is not Hermitian ({herm:e})")));
        }
        let min = min_eigenvalue(&rho)?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { layout, repr: Representation::Mixed(rho) })
    }

    /// Product basis state `|i₀⟩⊗|i₁⟩⊗…`.
    pub fn basis(layout: HilbertLayout, indices: &[usize]) -> Result<Self> {
        let k = layout.flat_index(indices)?;
        let mut v = DVector::zeros(layout.dim());
        v[k] = C64::from(1.0);
        Ok(Self { layout, repr: Representation::Pure(v) })
    }

    /// Kronecker product of pure factors; the layout is the concatenation.
    pub fn product(factors: &[QuantumState]) -> Result<Self> {
        let (first, rest) = factors.split_first().ok_or(Error::EmptyTensor)?;
        let mut layout = first.layout.clone();
        let mut v = first.as_pure()?.clone();
        for f in rest {
            layout = layout.concat(&f.layout)?;
            v = v.kronecker(f.as_pure()?);
        }
        Self::pure(layout, v)
    }

    /// Wraps integrator output without re-checking the invariants.
    pub(crate) fn from_parts_unchecked(layout: HilbertLayout, repr: Representation) -> Self {
        Self { layout, repr }
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_pure_representation(&self) -> bool {
        matches!(self.repr, Representation::Pure(_))
    }

    pub fn as_pure(&self) -> Result<&DVector<C64>> {
        match &self.repr {
            Representation::Pure(v) => Ok(v),
            Representation::Mixed(_) => Err(Error::InvalidState("expected a pure state".into())),
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            Representation::Pure(v) => v * v.adjoint(),
            Representation::Mixed(r) => r.clone(),
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.repr {
            Representation::Pure(_) => 1.0,
            Representation::Mixed(r) => (r * r).trace().re,
        }
    }

    /// Probability of each basis state of subsystem `label`.
    pub fn populations(&self, label: &str) -> Result<alloc::vec::Vec<f64>> {
        let idx = self.layout.index_of(label).ok_or_else(|| Error::UnknownSubsystem(label.into()))?;
        let subs = self.layout.subsystems();
        let dim = subs[idx].dim;
        let inner: usize = subs[idx + 1..].iter().map(|s| s.dim).product();
        let mut out = alloc::vec![0.0; dim];
        let diag: alloc::vec::Vec<f64> = match &self.repr {
            Representation::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Representation::Mixed(r) => (0..r.nrows()).map(|i| r[(i, i)].re).collect(),
        };
        for (k, p) in diag.into_iter().enumerate() {
            out[(k / inner) % dim] += p;
        }
        Ok(out)
    }
}

fn check_len(layout: &HilbertLayout, n: usize) -> Result<()> {
    if n != layout.dim() {
        return Err(Error::DimensionMismatch { expected: layout.dim(), found: n });
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> Result<f64> {
    let herm = (m + m.adjoint()) * C64::from(0.5);
    let eig = nalgebra::SymmetricEigen::try_new(herm, f64::EPSILON, 0).ok_or(Error::NonConvergent)?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `⟨ψ|A|ψ⟩` or `Tr(Aρ)`.
pub fn expectation(op: &Operator, state: &QuantumState) -> Result<C64> {
    if op.layout() != state.layout() {
        return Err(Error::LayoutMismatch);
    }
    Ok(match &state.repr {
        Representation::Pure(v) => v.dotc(&(op.matrix() * v)),
        Representation::Mixed(r) => trace_product(op.matrix(), r),
    })
}

/// Real expectation of a Hermitian operator; fails if the imaginary residue
/// exceeds 1e-10 relative to the operator scale.
pub fn expectation_real(op: &Operator, state: &QuantumState) -> Result<f64> {
    let z = expectation(op, state)?;
    let scale = op.max_abs().max(1.0);
    if z.im.abs() > 1e-10 * scale {
        return Err(Error::InvalidState(format!("expectation has imaginary part {:e}", z.im)));
    }
    Ok(z.re)
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::from(0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
