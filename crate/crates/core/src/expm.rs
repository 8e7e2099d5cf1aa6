//! Matrix exponential by scaling and squaring with Padé approximants
//! (Higham 2005 parameters).

use nalgebra::DMatrix;
use num_traits::Float;

use crate::C64;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Maximum absolute column sum.
pub fn norm1(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled_identity(n: usize, c: f64) -> DMatrix<C64> {
    DMatrix::from_diagonal_element(n, n, C64::new(c, 0.0))
}

fn pade_low(a: &DMatrix<C64>, b: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = scaled_identity(n, b[1]);
    let mut v = scaled_identity(n, b[0]);
    let mut p = DMatrix::<C64>::identity(n, n);
    for k in 1..b.len() / 2 {
        p = &p * &a2;
        u += &p * C64::from(b[2 * k + 1]);
        v += &p * C64::from(b[2 * k]);
    }
    (a * u, v)
}

fn pade_13(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let b = |k: usize| C64::from(B13[k]);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = a * (&a6 * inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + scaled_identity(n, B13[1]));
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + scaled_identity(n, B13[0]);
    (u, v)
}

/// `exp(a)` for a square complex matrix.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let nrm = norm1(a);
    if nrm == 0.0 {
        return DMatrix::identity(n, n);
    }
    for (m, theta) in THETA {
        if nrm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return solve_pade(u, v);
        }
    }
    let s = Float::max(Float::ceil(Float::log2(nrm / THETA_13)), 0.0) as i32;
    let scaled = a * C64::from(Float::powi(2.0, -s));
    let (u, v) = pade_13(&scaled);
    let mut r = solve_pade(u, v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn solve_pade(u: DMatrix<C64>, v: DMatrix<C64>) -> DMatrix<C64> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is singular")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(a: &DMatrix<C64>) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rotation_generator() {
        // exp(θ [[0,-1],[1,0]]) is a rotation by θ
        for &theta in &[1e-4, 0.3, 2.0, 40.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]).map(C64::from);
            let r = expm(&a);
            let (c, s) = (Float::cos(theta), Float::sin(theta));
            let want = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).map(C64::from);
            assert!(max_abs(&(r - want)) < 1e-12, "θ = {theta}");
        }
    }

    #[test]
    fn diagonal_phases() {
        let d = [C64::new(0.0, 1.5), C64::new(-0.7, 0.2), C64::new(3.0, -9.0)];
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        let r = expm(&a);
        for (i, z) in d.iter().enumerate() {
            assert!((r[(i, i)] - z.exp()).norm() < 1e-12 * z.exp().norm().max(1.0));
        }
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 5.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]).map(C64::from);
        let r = expm(&a);
        // I + A + A²/2
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 8.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]).map(C64::from);
        assert!(max_abs(&(r - want)) < 1e-12);
    }
}
