//! Compressed-row operators applied to row-major dense blocks.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::C64;

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// `out += c · A x` for `x` with `width` columns, row-major.
    pub fn mul_acc(&self, x: &[C64], width: usize, out: &mut [C64], c: C64) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let orow = &mut out[i * width..(i + 1) * width];
            for (&k, &a) in cols.iter().zip(vals) {
                let f = c * a;
                let xrow = &x[k * width..(k + 1) * width];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += f * xv;
                }
            }
        }
    }

    /// `out += T A†` for row-major square `t`.
    pub fn mul_adjoint_right_acc(&self, t: &[C64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let trow = &t[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                let (cols, vals) = self.row(j);
                let mut acc = C64::from(0.0);
                for (&k, &a) in cols.iter().zip(vals) {
                    acc += trow[k] * a.conj();
                }
                *o += acc;
            }
        }
    }

    /// `Tr(A ρ)` for row-major square `rho`.
    pub fn trace_product(&self, rho: &[C64]) -> C64 {
        let n = self.n;
        let mut acc = C64::from(0.0);
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                acc += a * rho[k * n + i];
            }
        }
        acc
    }

    /// `ψ† A ψ`
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let mut acc = C64::from(0.0);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = C64::from(0.0);
            for (&k, &a) in cols.iter().zip(vals) {
                s += a * psi[k];
            }
            acc += psi[i].conj() * s;
        }
        acc
    }
}
