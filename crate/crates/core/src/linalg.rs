//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMat {
    let v: Vec<C64> = values.iter().map(|&x| c(x, 0.0)).collect();
    diag(&v)
}

pub fn from_real_rows(d: usize, rows: &[f64]) -> CMat {
    CMat::from_row_iterator(d, d, rows.iter().map(|&x| c(x, 0.0)))
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn min_singular(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().min()
}

/// Two-norm condition number; infinite for singular input.
pub fn cond2(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().lu().try_inverse()
}

/// Relative Frobenius distance `||a - b|| / max(||b||, tiny)`.
pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    fro(&(a - b)) / fro(b).max(1e-300)
}

pub fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    fro(&(a * b - b * a))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Pairwise (cascade) summation in index order. The reduction tree depends
/// only on the slice length, so results are bit-stable.
pub fn pairwise_sum(terms: &[CMat], rows: usize, cols: usize) -> CMat {
    match terms.len() {
        0 => CMat::zeros(rows, cols),
        1 => terms[0].clone(),
        n => {
            let mid = n / 2;
            pairwise_sum(&terms[..mid], rows, cols) + pairwise_sum(&terms[mid..], rows, cols)
        }
    }
}

pub fn pairwise_sum_scalar(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        n => {
            let mid = n / 2;
            pairwise_sum_scalar(&terms[..mid]) + pairwise_sum_scalar(&terms[mid..])
        }
    }
}

/// Eigendata of a general complex matrix.
#[derive(Debug, Clone)]
pub struct EigenData {
    pub values: Vec<C64>,
    /// Unit-norm eigenvectors as columns.
    pub vectors: CMat,
    pub vectors_inv: Option<CMat>,
    /// Two-norm condition number of `vectors`.
    pub condition: f64,
    /// `||V diag(values) V^-1 - A||_F / ||A||_F`, infinite when `V` is singular.
    pub reconstruction_error: f64,
}

impl EigenData {
    pub fn is_diagonalizable(&self, max_condition: f64) -> bool {
        self.vectors_inv.is_some()
            && self.condition < max_condition
            && self.reconstruction_error <= 1e-10
    }

    /// `V diag(g(lambda_i)) V^-1`. Panics if the eigenvector matrix is singular.
    pub fn apply(&self, g: impl Fn(C64) -> C64) -> CMat {
        let gv: Vec<C64> = self.values.iter().map(|&l| g(l)).collect();
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= gv[j];
        }
        scaled * self.vectors_inv.as_ref().expect("eigenvector matrix is singular")
    }
}

/// Eigendecomposition through the complex Schur form `A = Q T Q*`; the
/// eigenvectors of the triangular factor come from back substitution.
pub fn eigen(a: &CMat) -> EigenData {
    let d = a.nrows();
    let (q, t) = nalgebra::linalg::Schur::new(a.clone()).unpack();
    let values: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
    let scale = fro(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;
    let mut v = CMat::zeros(d, d);
    for i in 0..d {
        let lambda = t[(i, i)];
        let mut col = vec![ZERO; d];
        col[i] = ONE;
        for j in (0..i).rev() {
            let mut acc = ZERO;
            for k in (j + 1)..=i {
                acc += t[(j, k)] * col[k];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < small {
                den = c(small, 0.0);
            }
            col[j] = -acc / den;
        }
        for (r, val) in col.into_iter().enumerate() {
            v[(r, i)] = val;
        }
    }
    let mut vectors = &q * v;
    for mut col in vectors.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= c(n, 0.0);
        }
    }
    let condition = cond2(&vectors);
    let vectors_inv = if condition.is_finite() { inverse(&vectors) } else { None };
    let reconstruction_error = match &vectors_inv {
        Some(vi) => {
            let mut scaled = vectors.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= values[j];
            }
            let rebuilt = scaled * vi;
            fro(&(rebuilt - a)) / fro(a).max(f64::MIN_POSITIVE)
        }
        None => f64::INFINITY,
    };
    EigenData { values, vectors, vectors_inv, condition, reconstruction_error }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_exact() {
        let a = real_diag(&[1.0, 4.0, 9.0]);
        let e = eigen(&a);
        assert!(e.is_diagonalizable(1e8));
        let mut vals: Vec<f64> = e.values.iter().map(|z| z.re).collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![1.0, 4.0, 9.0]);
        assert!(rel_err(&e.apply(|z| z), &a) < 1e-14);
    }

    #[test]
    fn jordan_block_is_flagged() {
        let j = from_real_rows(2, &[2.0, 1.0, 0.0, 2.0]);
        let e = eigen(&j);
        assert!(!e.is_diagonalizable(1e8));
    }

    #[test]
    fn nonnormal_reconstruction() {
        let a = CMat::from_row_slice(3, 3, &[
            c(1.0, 0.2), c(2.0, 0.0), c(0.0, -1.0),
            c(0.0, 0.0), c(3.0, 0.0), c(0.5, 0.5),
            c(0.1, 0.0), c(0.0, 0.0), c(5.0, -0.3),
        ]);
        let e = eigen(&a);
        assert!(e.is_diagonalizable(1e8), "{e:?}");
        assert!(rel_err(&e.apply(|z| z), &a) < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let terms: Vec<CMat> = (0..7).map(|k| CMat::from_element(2, 2, c(k as f64, 1.0))).collect();
        let s = pairwise_sum(&terms, 2, 2);
        assert_eq!(s[(0, 0)], c(21.0, 7.0));
    }
}
