//! Dyadic decomposition of the operator-valued calculus and the sign-sum
//! diagnostics built from it.
//!
//! Substituting `ζ = 2^{-k} t^{-1} e^{±iν}` in
//! `F(A) = (-1/2πi) ∫ ζ^{-s} F(ζ) A^s R(ζ,A) dζ` and using
//! `A^s R(r e^{iρ}, A) = r^{s-1} h_s^ρ(A/r)` gives
//! `F(A) = (1/2πi) ∫_1^2 (M₋(t) - M₊(t)) dt/t` with
//! `M±(t) = e^{±i(1-s)ν} Σ_k F(2^{-k} t^{-1} e^{±iν}) h_s^{±ν}(2^k t A)`.
//! The lower ray is traversed inward, hence the relative sign.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::functions::{OperatorFunction, ScalarFunction};
use crate::json::vector_json;
use crate::linalg::{norm2, pairwise_sum, CMat, C64};
use crate::norms::NormSpec;
use crate::operators::{
    fractional_power, resolvent_scaled, spectral_angle, FractionalExponent, OperatorMatrix, RESOLVENT_TOLERANCE,
};
use crate::search::{for_each_sign_pattern, random_phase, random_sign, stream};

use super::scalar::contour_fcalc;

/// Tail tolerance for the truncated dyadic sums.
pub const DYADIC_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct DyadicSums {
    #[serde(with = "crate::json::matrix")]
    pub plus: CMat,
    #[serde(with = "crate::json::matrix")]
    pub minus: CMat,
    pub k: usize,
    pub tail_bound: f64,
}

/// Bound on `||Σ_{|k| > K} F(..) h_s(2^k t A)||` for one ray, with
/// `m = sup ||F||` and `power = ||A^s||`; infinite when `K` is too small for
/// the resolvent estimates to apply.
pub fn dyadic_tail_bound(a: &OperatorMatrix, power: f64, m: f64, s: f64, t: f64, k: usize) -> f64 {
    let inv = a.inverse_norm2();
    let big = 2f64.powi(k as i32 + 1);
    if big * t < 2.0 * inv || t / big > 0.5 / a.norm2() {
        return f64::INFINITY;
    }
    let upper = 2.0 * inv * t.powf(s - 1.0) * big.powf(s - 1.0) / (1.0 - 2f64.powf(s - 1.0));
    let lower = 2.0 * t.powf(s) * big.powf(-s) / (1.0 - 2f64.powf(-s));
    m * power * (upper + lower)
}

fn auto_k(a: &OperatorMatrix, power: f64, m: f64, s: f64) -> usize {
    (1..400)
        .find(|&k| {
            dyadic_tail_bound(a, power, m, s, 1.0, k) <= DYADIC_TOLERANCE
                && dyadic_tail_bound(a, power, m, s, 2.0, k) <= DYADIC_TOLERANCE
        })
        .unwrap_or(400)
}

struct DyadicSetup<'a> {
    a: &'a OperatorMatrix,
    power: CMat,
    s: f64,
    nu: f64,
    k: usize,
    m: f64,
}

impl<'a> DyadicSetup<'a> {
    fn new(a: &'a OperatorMatrix, f: &OperatorFunction, s: FractionalExponent, nu: f64, k: Option<usize>) -> Result<Self> {
        let omega = spectral_angle(a)?;
        if !(nu > omega && nu < f.domain_angle) {
            return Err(Error::InvalidInput(format!(
                "nu = {nu} must lie strictly between the spectral angle {omega} and the domain angle {}",
                f.domain_angle
            )));
        }
        let power = fractional_power(a, s)?;
        let m = f.sup_bound();
        let np = norm2(&power);
        let k = match k {
            Some(k) => {
                let tail = dyadic_tail_bound(a, np, m, s.s, 1.0, k).max(dyadic_tail_bound(a, np, m, s.s, 2.0, k));
                if tail > DYADIC_TOLERANCE {
                    return Err(Error::TailTooLarge { bound: tail, tolerance: DYADIC_TOLERANCE, k });
                }
                k
            }
            None => auto_k(a, np, m, s.s),
        };
        Ok(DyadicSetup { a, power, s: s.s, nu, k, m })
    }

    /// `h_s^{ρ}(cA) = c^{s-1} A^s R(e^{iρ}/c, A)`.
    fn h(&self, c: f64, rho: f64) -> Result<CMat> {
        let r = resolvent_scaled(self.a.matrix(), C64::from_polar(1.0 / c, rho), RESOLVENT_TOLERANCE * self.a.norm2())?;
        Ok(&self.power * r * C64::new(c.powf(self.s - 1.0), 0.0))
    }

    fn sums(&self, f: &OperatorFunction, t: f64) -> Result<(CMat, CMat)> {
        let d = self.a.dim();
        let mut out = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let rho = sign * self.nu;
            let terms: Vec<CMat> = (-(self.k as i64)..=self.k as i64)
                .into_par_iter()
                .map(|k| {
                    let c = 2f64.powi(k as i32) * t;
                    let zeta = C64::from_polar(1.0 / c, rho);
                    Ok(f.eval(zeta) * self.h(c, rho)?)
                })
                .collect::<Result<_>>()?;
            out.push(pairwise_sum(&terms, d, d) * C64::from_polar(1.0, sign * (1.0 - self.s) * self.nu));
        }
        let minus = out.pop().expect("two rays");
        let plus = out.pop().expect("two rays");
        Ok((plus, minus))
    }
}

/// The truncated sums `(M₊(t), M₋(t))`; `K` is chosen from the tail bound
/// when not given.
pub fn dyadic_decomposition(
    a: &OperatorMatrix,
    f: &OperatorFunction,
    s: FractionalExponent,
    nu: f64,
    t: f64,
    k: Option<usize>,
) -> Result<DyadicSums> {
    if !(1.0..=2.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [1, 2]")));
    }
    let setup = DyadicSetup::new(a, f, s, nu, k)?;
    let (plus, minus) = setup.sums(f, t)?;
    let np = norm2(&setup.power);
    Ok(DyadicSums { plus, minus, k: setup.k, tail_bound: 2.0 * dyadic_tail_bound(a, np, setup.m, s.s, t, setup.k) })
}

/// `(1/2πi) ∫_1^2 (M₋ - M₊) dt/t` by the trapezoid rule in `ln t`, which is
/// spectrally accurate because the integrand is `ln 2`-periodic in `ln t`.
pub fn dyadic_reconstruction(
    a: &OperatorMatrix,
    f: &OperatorFunction,
    s: FractionalExponent,
    nu: f64,
    t_nodes: usize,
    k: Option<usize>,
) -> Result<CMat> {
    let setup = DyadicSetup::new(a, f, s, nu, k)?;
    let d = a.dim();
    let terms: Vec<CMat> = (0..t_nodes)
        .map(|j| {
            let t = 2f64.powf(j as f64 / t_nodes as f64);
            let (p, m) = setup.sums(f, t)?;
            Ok(m - p)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms, d, d) * (C64::new(LN_2 / t_nodes as f64, 0.0) / C64::new(0.0, 2.0 * PI)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Exhaustive,
    Randomized,
}

/// `a_k = <T_k x, y*>` for the norming pair of `S = Σ α_k T_k`.
fn pairing_coefficients(terms: &[CMat], s: &CMat, norm: &NormSpec) -> (f64, Vec<C64>) {
    let (val, x) = norm.operator_norm_with_vector(s);
    let sx: Vec<C64> = (0..s.nrows()).map(|i| (0..s.ncols()).map(|j| s[(i, j)] * x[j]).sum()).collect();
    let ystar = norm.norming_functional(&sx);
    let coeffs = terms
        .iter()
        .map(|t| {
            (0..t.nrows())
                .map(|i| (0..t.ncols()).map(|j| t[(i, j)] * x[j]).sum::<C64>() * ystar[i])
                .sum::<C64>()
        })
        .collect();
    (val, coeffs)
}

fn combine(terms: &[CMat], alpha: &[C64]) -> CMat {
    let d = terms[0].nrows();
    let mut s = CMat::zeros(d, terms[0].ncols());
    for (t, a) in terms.iter().zip(alpha) {
        s += t * *a;
    }
    s
}

/// Alternating ascent for `sup_{|α_k| <= 1} ||Σ α_k T_k||`: fix the norming
/// pair of the current sum, then align every phase with it.
fn phase_ascent(terms: &[CMat], norm: &NormSpec, mut alpha: Vec<C64>) -> (f64, Vec<C64>, usize) {
    let mut value = norm.operator_norm(&combine(terms, &alpha));
    let mut evals = 1;
    for _ in 0..100 {
        let (_, coeffs) = pairing_coefficients(terms, &combine(terms, &alpha), norm);
        let next: Vec<C64> = coeffs
            .iter()
            .zip(&alpha)
            .map(|(c, a)| if c.norm() > 0.0 { c.conj() / c.norm() } else { *a })
            .collect();
        let v = norm.operator_norm(&combine(terms, &next));
        evals += 1;
        if v <= value * (1.0 + 1e-13) {
            if v > value {
                value = v;
                alpha = next;
            }
            break;
        }
        value = v;
        alpha = next;
    }
    (value, alpha, evals)
}

/// Exact `max_{ε ∈ {±1}^n} |Σ ε_k a_k|`: for the optimal direction θ the
/// signs are `sgn Re(e^{-iθ} a_k)`, constant between the `2n` angles where
/// some `Re(e^{-iθ} a_k)` vanishes.
pub fn best_real_signs(a: &[C64]) -> (f64, Vec<f64>) {
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * a.len() + 1);
    for z in a {
        if z.norm() > 0.0 {
            let b = (z.arg() + PI / 2.0).rem_euclid(PI);
            cuts.push(b);
            cuts.push(b + PI);
        }
    }
    if cuts.is_empty() {
        return (0.0, vec![1.0; a.len()]);
    }
    cuts.sort_by(f64::total_cmp);
    let first = cuts[0];
    cuts.push(first + 2.0 * PI);
    let mut best = (-1.0, vec![1.0; a.len()]);
    for w in cuts.windows(2) {
        let theta = 0.5 * (w[0] + w[1]);
        let dir = C64::from_polar(1.0, -theta);
        let signs: Vec<f64> = a.iter().map(|z| if (dir * z).re >= 0.0 { 1.0 } else { -1.0 }).collect();
        let v = a.iter().zip(&signs).map(|(z, s)| z * s).sum::<C64>().norm();
        if v > best.0 {
            best = (v, signs);
        }
    }
    best
}

fn real_sign_ascent(terms: &[CMat], norm: &NormSpec, mut signs: Vec<f64>) -> (f64, Vec<f64>, usize) {
    let as_c = |s: &[f64]| -> Vec<C64> { s.iter().map(|&e| C64::new(e, 0.0)).collect() };
    let mut value = norm.operator_norm(&combine(terms, &as_c(&signs)));
    let mut evals = 1;
    for _ in 0..100 {
        let (_, coeffs) = pairing_coefficients(terms, &combine(terms, &as_c(&signs)), norm);
        let (_, next) = best_real_signs(&coeffs);
        let v = norm.operator_norm(&combine(terms, &as_c(&next)));
        evals += 1;
        if v <= value * (1.0 + 1e-13) {
            if v > value {
                value = v;
                signs = next;
            }
            break;
        }
        value = v;
        signs = next;
    }
    (value, signs, evals)
}

/// `max_ε ||Σ ε_k T_k||` over all real sign patterns, visited in Gray-code
/// order with an incrementally updated sum. The first sign is fixed to `+1`
/// since `ε` and `-ε` give the same norm.
fn exhaustive_real(terms: &[CMat], norm: &NormSpec) -> (f64, Vec<f64>, usize) {
    let n = terms.len();
    let mut s = combine(terms, &vec![C64::new(1.0, 0.0); n]);
    let mut best = (-1.0, vec![1.0; n]);
    let mut count = 0;
    for_each_sign_pattern(n - 1, |signs, flipped| {
        if let Some(k) = flipped {
            s += &terms[k + 1] * C64::new(2.0 * signs[k], 0.0);
        }
        count += 1;
        let v = norm.operator_norm(&s);
        if v > best.0 {
            let mut full = vec![1.0];
            full.extend_from_slice(signs);
            best = (v, full);
        }
    });
    (best.0, best.1, count)
}

/// Largest `n` for which sign patterns are enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// `sup_{|α_k| <= 1} ||Σ_{|k| <= K} α_k f(2^k t A)||`.
#[allow(clippy::too_many_arguments)]
pub fn unconditional_dyadic_bound(
    a: &OperatorMatrix,
    f: &ScalarFunction,
    t: f64,
    k: usize,
    norm: &NormSpec,
    mode: BoundMode,
    starts: usize,
    seed: u64,
) -> Result<BoundEstimate> {
    norm.validate()?;
    norm.check_dim(a.dim())?;
    if f.decay.is_none() {
        return Err(Error::MissingDecay(f.name.clone()));
    }
    let n = 2 * k + 1;
    let terms: Vec<CMat> = (-(k as i64)..=k as i64)
        .map(|j| Ok(contour_fcalc(&a.scaled(2f64.powi(j as i32) * t), f, None)?.value))
        .collect::<Result<_>>()?;
    let (value, alpha, method) = match mode {
        BoundMode::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::InvalidInput(format!("exhaustive mode needs 2K+1 <= {EXHAUSTIVE_LIMIT}, got {n}")));
            }
            let (v_real, signs, count) = exhaustive_real(&terms, norm);
            let start: Vec<C64> = signs.iter().map(|&e| C64::new(e, 0.0)).collect();
            let (v, alpha, evals) = phase_ascent(&terms, norm, start);
            let mut m = MethodInfo::new("exhaustive").note("real signs enumerated, then complex phases polished");
            m.samples = count;
            m.evaluations = count + evals;
            m = m.note(format!("real-sign maximum {v_real}"));
            if v >= v_real {
                (v, alpha, m)
            } else {
                (v_real, signs.iter().map(|&e| C64::new(e, 0.0)).collect(), m)
            }
        }
        BoundMode::Randomized => {
            let runs: Vec<(f64, Vec<C64>, usize)> = (0..starts.max(1))
                .into_par_iter()
                .map(|i| {
                    let start: Vec<C64> = if i == 0 {
                        vec![C64::new(1.0, 0.0); n]
                    } else {
                        let mut rng = stream(seed, i as u64);
                        (0..n).map(|_| random_phase(&mut rng)).collect()
                    };
                    phase_ascent(&terms, norm, start)
                })
                .collect();
            let evals = runs.iter().map(|r| r.2).sum();
            let best = runs.into_iter().fold((-1.0, Vec::new()), |acc, r| if r.0 > acc.0 { (r.0, r.1) } else { acc });
            let mut m = MethodInfo::new("randomized");
            m.seed = Some(seed);
            m.starts = starts.max(1);
            m.evaluations = evals;
            (best.0, best.1, m)
        }
    };
    Ok(BoundEstimate::new(value, Witness::Coefficients { t, ray: 0, coefficients: vector_json(&alpha) }, method, true))
}

/// `sup_{t, ±, ε} ||Σ_{|k| <= K} ε_k (2^k t)^{1-s} A^s R(2^k t e^{±iν}, A)||`
/// over the given `t` grid, real signs only (exhaustive for `2K+1 <= 20`).
#[allow(clippy::too_many_arguments)]
pub fn hinfty_criterion(
    a: &OperatorMatrix,
    nu: f64,
    s: FractionalExponent,
    t_grid: &[f64],
    k: usize,
    norm: &NormSpec,
    starts: usize,
    seed: u64,
) -> Result<BoundEstimate> {
    norm.validate()?;
    norm.check_dim(a.dim())?;
    let omega = spectral_angle(a)?;
    if !(nu > omega && nu < PI) {
        return Err(Error::NotSectorial(format!("nu = {nu} must exceed the spectral angle {omega}")));
    }
    let power = fractional_power(a, s)?;
    let threshold = RESOLVENT_TOLERANCE * a.norm2();
    let n = 2 * k + 1;
    let exhaustive = n <= EXHAUSTIVE_LIMIT;
    let cases: Vec<(f64, i8)> = t_grid.iter().flat_map(|&t| [(t, 1i8), (t, -1i8)]).collect();
    let results: Vec<(f64, Vec<f64>, usize)> = cases
        .par_iter()
        .enumerate()
        .map(|(ci, &(t, ray))| {
            let terms: Vec<CMat> = (-(k as i64)..=k as i64)
                .map(|j| {
                    let c = 2f64.powi(j as i32) * t;
                    let r = resolvent_scaled(a.matrix(), C64::from_polar(c, ray as f64 * nu), threshold)?;
                    Ok(&power * r * C64::new(c.powf(1.0 - s.s), 0.0))
                })
                .collect::<Result<_>>()?;
            if exhaustive {
                return Ok(exhaustive_real(&terms, norm));
            }
            let mut best = (-1.0, vec![1.0; n], 0);
            for i in 0..starts.max(1) {
                let start: Vec<f64> = if i == 0 {
                    vec![1.0; n]
                } else {
                    let mut rng = stream(seed, (ci * starts.max(1) + i) as u64);
                    (0..n).map(|_| random_sign(&mut rng)).collect()
                };
                let (v, signs, e) = real_sign_ascent(&terms, norm, start);
                best.2 += e;
                if v > best.0 {
                    best = (v, signs, best.2);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best_i = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[best_i].0 {
            best_i = i;
        }
    }
    let (t, ray) = cases[best_i];
    let signs: Vec<C64> = results[best_i].1.iter().map(|&e| C64::new(e, 0.0)).collect();
    let mut m = MethodInfo::new(if exhaustive { "exhaustive" } else { "randomized" });
    m.samples = cases.len();
    m.evaluations = results.iter().map(|r| r.2).sum();
    if !exhaustive {
        m.seed = Some(seed);
        m.starts = starts.max(1);
    }
    Ok(BoundEstimate::new(
        results[best_i].0,
        Witness::Coefficients { t, ray, coefficients: vector_json(&signs) },
        m,
        true,
    ))
}

/// The default `t` grid: 8 log-spaced points in `[1, 2]`.
pub fn default_t_grid() -> Vec<f64> {
    (0..8).map(|j| 2f64.powf(j as f64 / 7.0)).collect()
}
