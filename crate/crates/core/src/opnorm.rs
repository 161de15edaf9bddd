//! Norm estimation for linear maps given only through matvecs.

use nalgebra::DMatrix;

use crate::linalg::{CMat, C64, ZERO};
use crate::norms::NormSpec;
use crate::search::{gaussian_vector, stream};

pub trait LinearOp: Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    /// Bilinear transpose: `<Tx, y> = <x, T^T y>` with `<a, b> = Σ a_i b_i`.
    fn apply_transpose(&self, y: &[C64]) -> Vec<C64>;

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let yc: Vec<C64> = y.iter().map(|z| z.conj()).collect();
        self.apply_transpose(&yc).into_iter().map(|z| z.conj()).collect()
    }
}

impl LinearOp for CMat {
    fn dim_in(&self) -> usize {
        self.ncols()
    }

    fn dim_out(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    fn apply_transpose(&self, y: &[C64]) -> Vec<C64> {
        (0..self.ncols())
            .map(|j| (0..self.nrows()).map(|i| self[(i, j)] * y[i]).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub value: f64,
    pub x: Vec<C64>,
    pub iterations: usize,
}

fn normalize(x: &mut [C64], norm: &NormSpec) -> bool {
    let n = norm.norm(x);
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|z| *z /= n);
    true
}

fn sum_of_norms(ops: &[&dyn LinearOp], norm_out: &NormSpec, x: &[C64]) -> f64 {
    ops.iter().map(|op| norm_out.norm(&op.apply(x))).sum()
}

/// Lower bound for `sup_x Σ_i ||P_i x||_out / ||x||_in` by duality ascent
/// (Boyd's power method generalized to sums): `x -> J*(Σ P_i^T J(P_i x))`.
/// Each step is nondecreasing; starts are the hints followed by seeded
/// Gaussian vectors.
pub fn duality_ascent(
    ops: &[&dyn LinearOp],
    norm_in: &NormSpec,
    norm_out: &NormSpec,
    hints: &[Vec<C64>],
    random_starts: usize,
    seed: u64,
) -> AscentResult {
    let d = ops[0].dim_in();
    let dual_in = norm_in.dual();
    let mut starts: Vec<Vec<C64>> = hints.iter().filter(|h| h.len() == d).cloned().collect();
    for k in 0..random_starts {
        starts.push(gaussian_vector(&mut stream(seed, k as u64), d));
    }
    let mut best = AscentResult { value: 0.0, x: vec![ZERO; d], iterations: 0 };
    for mut x in starts {
        if !normalize(&mut x, norm_in) {
            continue;
        }
        let mut val = sum_of_norms(ops, norm_out, &x);
        let mut it = 0;
        while it < 200 {
            it += 1;
            let mut z = vec![ZERO; d];
            for op in ops {
                let y = op.apply(&x);
                let ys = norm_out.norming_functional(&y);
                for (zi, wi) in z.iter_mut().zip(op.apply_transpose(&ys)) {
                    *zi += wi;
                }
            }
            let mut xn = dual_in.norming_functional(&z);
            if !normalize(&mut xn, norm_in) {
                break;
            }
            let vn = sum_of_norms(ops, norm_out, &xn);
            if vn <= val * (1.0 + 1e-13) {
                if vn > val {
                    val = vn;
                    x = xn;
                }
                break;
            }
            val = vn;
            x = xn;
        }
        if val > best.value {
            best = AscentResult { value: val, x, iterations: it };
        }
    }
    best
}

fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let h = dot_conj(b, v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= h * bi;
            }
        }
    }
}

/// Largest singular value by Golub–Kahan–Lanczos bidiagonalization with full
/// reorthogonalization; stops when the estimate is stable to `tol` (relative).
pub fn lanczos_top_singular(op: &dyn LinearOp, max_iter: usize, tol: f64, seed: u64) -> f64 {
    let n = op.dim_in();
    let m = op.dim_out();
    let kmax = max_iter.min(n).min(m).max(1);
    let mut v = gaussian_vector(&mut stream(seed, 0), n);
    let nv = l2(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut vs: Vec<Vec<C64>> = vec![v];
    let mut us: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = 0.0;
    let mut stable = 0;
    for j in 0..kmax {
        let mut u = op.apply(&vs[j]);
        orthogonalize(&mut u, &us);
        let a = l2(&u);
        alphas.push(a);
        if a > 0.0 {
            u.iter_mut().for_each(|z| *z /= a);
        }
        us.push(u);
        let mut w = op.apply_adjoint(&us[j]);
        orthogonalize(&mut w, &vs);
        let b = l2(&w);
        let k = alphas.len();
        let check = k % 4 == 0 || k == kmax || b <= 1e-14 * a.max(1e-300);
        if check {
            let mut bmat = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                bmat[(i, i)] = alphas[i];
                if i + 1 < k {
                    bmat[(i, i + 1)] = betas[i];
                }
            }
            let est = bmat.singular_values().max();
            if (est - last).abs() <= tol * est {
                stable += 1;
                if stable >= 2 {
                    return est;
                }
            } else {
                stable = 0;
            }
            last = est;
            if b <= 1e-14 * a.max(1e-300) {
                return est;
            }
        }
        betas.push(b);
        if b > 0.0 {
            w.iter_mut().for_each(|z| *z /= b);
        }
        vs.push(w);
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, norm2};

    fn test_matrix(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0))
    }

    #[test]
    fn lanczos_matches_svd() {
        let m = test_matrix(30);
        let est = lanczos_top_singular(&m, 60, 1e-13, 1);
        assert!((est - norm2(&m)).abs() < 1e-9 * norm2(&m));
    }

    #[test]
    fn duality_ascent_on_l2_matches_svd() {
        let m = test_matrix(6);
        let r = duality_ascent(&[&m], &NormSpec::l2(), &NormSpec::l2(), &[], 8, 3);
        assert!((r.value - norm2(&m)).abs() < 1e-6 * norm2(&m));
    }

    #[test]
    fn transpose_is_bilinear_adjoint() {
        let m = test_matrix(4);
        let x: Vec<C64> = (0..4).map(|k| c(k as f64, 1.0)).collect();
        let y: Vec<C64> = (0..4).map(|k| c(1.0, -(k as f64))).collect();
        let lhs: C64 = m.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: C64 = x.iter().zip(m.apply_transpose(&y)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
