use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::{expm, Error, HilbertLayout, Result, C64};

/// Dense complex operator over a [`HilbertLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    layout: HilbertLayout,
    matrix: DMatrix<C64>,
}

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

impl Operator {
    pub fn new(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: if matrix.nrows() != d { matrix.nrows() } else { matrix.ncols() } });
        }
        Ok(Self { layout, matrix })
    }

    pub fn from_real(layout: HilbertLayout, matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(layout, matrix.map(C64::from))
    }

    pub fn identity(layout: &HilbertLayout) -> Self {
        let d = layout.dim();
        Self { layout: layout.clone(), matrix: DMatrix::identity(d, d) }
    }

    pub fn zeros(layout: &HilbertLayout) -> Self {
        let d = layout.dim();
        Self { layout: layout.clone(), matrix: DMatrix::zeros(d, d) }
    }

    pub fn diagonal(layout: &HilbertLayout, diag: &[f64]) -> Result<Self> {
        let d = layout.dim();
        if diag.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: diag.len() });
        }
        let v = DVector::from_iterator(d, diag.iter().map(|&x| C64::from(x)));
        Ok(Self { layout: layout.clone(), matrix: DMatrix::from_diagonal(&v) })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Same matrix, different labels; the dimensions must agree.
    pub fn relabel(self, layout: HilbertLayout) -> Result<Self> {
        Self::new(layout, self.matrix)
    }

    pub fn dagger(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { layout: self.layout.clone(), matrix: &self.matrix * c }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::from(c))
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { layout: self.layout.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { layout: self.layout.clone(), matrix: &self.matrix - &other.matrix })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { layout: self.layout.clone(), matrix: &self.matrix * &other.matrix })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn anticommutator(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix + &other.matrix * &self.matrix,
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `max|A − A†|`
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL * self.max_abs()
    }

    /// `max|A†A − 1|`
    pub fn unitarity_error(&self) -> f64 {
        let p = self.matrix.adjoint() * &self.matrix;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - id).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }

    /// `exp(A)`
    pub fn expm(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: expm::expm(&self.matrix) }
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian operator.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let n = self.dim();
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let eig = nalgebra::SymmetricEigen::try_new(herm, f64::EPSILON, 0).ok_or(Error::NonConvergent)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        Ok((values, vectors))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.0)
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(&self.matrix * v)
    }
}

impl Add for &Operator {
    type Output = Operator;
    /// Panics on layout mismatch; use [`Operator::try_add`] for a fallible sum.
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator layouts differ")
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator layouts differ")
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator layouts differ")
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(mut self, rhs: f64) -> Operator {
        self.matrix *= C64::from(rhs);
        self
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(mut self, rhs: C64) -> Operator {
        self.matrix *= rhs;
        self
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(mut self) -> Operator {
        self.matrix.neg_mut();
        self
    }
}
