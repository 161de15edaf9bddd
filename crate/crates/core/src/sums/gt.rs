use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{nodes_per_decade_for, ContourSpec};
use crate::error::{Error, Result};
use crate::json::{vector_json, Cplx};
use crate::linalg::{inverse, CMat, C64};
use crate::norms::NormSpec;
use crate::opnorm::LinearOp;
use crate::operators::{fractional_power, resolvent, spectral_angle, FractionalExponent, OperatorMatrix};
use crate::search::{gaussian_vector, stream};

/// Decades kept below `1/||A^{-1}||` and above `||A||`; the rest of each ray
/// is integrated from the leading-order asymptotics.
const WINDOW_DECADES: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtResult {
    /// `∫_{Γ_ν} ||A^s R(ζ,A) x||_1 |ζ|^{-s} |dζ|`.
    pub value: f64,
    /// `value / ||x||_1`; absent for `x = 0`.
    pub ratio: Option<f64>,
    /// Tail contribution outside the quadrature window.
    pub tails: f64,
    pub nodes: usize,
    pub nodes_per_decade: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtInterval {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    pub seed: u64,
    pub nodes_per_decade: usize,
    pub argmin: Vec<Cplx>,
    pub argmax: Vec<Cplx>,
}

/// Kernels `A^s R(ζ_j,A)` with their `|dζ| |ζ|^{-s}` weights, plus the two
/// operators governing the tails: `A^{s-1}` near 0 and `A^s` near ∞.
struct GtQuadrature {
    kernels: Vec<(f64, CMat)>,
    small: CMat,
    large: CMat,
    small_factor: f64,
    large_factor: f64,
    npd: usize,
}

impl GtQuadrature {
    fn new(a: &OperatorMatrix, s: FractionalExponent, nu: f64, npd: Option<usize>) -> Result<Self> {
        let omega = spectral_angle(a)?;
        if !(nu > omega && nu < PI) {
            return Err(Error::NotSectorial(format!("contour angle {nu} must lie in (spectral angle {omega}, π)")));
        }
        let npd = npd.unwrap_or_else(|| nodes_per_decade_for(0.5 * (nu - omega).min(PI - nu)));
        let scale = 10f64.powf(WINDOW_DECADES);
        let spec = ContourSpec::new(nu, npd, 1.0 / (scale * a.inverse_norm2()), scale * a.norm2())?;
        let power = fractional_power(a, s)?;
        let kernels = spec
            .nodes()
            .par_iter()
            .map(|n| {
                // |dζ| = r du, and |w| = r (trapezoid end factor) du / 2π.
                let weight = 2.0 * PI * n.weight.norm() * n.r.powf(-s.s);
                Ok((weight, &power * resolvent(a, n.zeta)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let ainv = inverse(a.matrix()).ok_or_else(|| Error::NotSectorial("A is singular".into()))?;
        // Per ray: ∫_0^{r_min} r^{-s} dr and ∫_{r_max}^∞ r^{-1-s} dr.
        let small_factor = 2.0 * spec.r_min.powf(1.0 - s.s) / (1.0 - s.s);
        let large_factor = 2.0 * spec.r_max.powf(-s.s) / s.s;
        Ok(GtQuadrature { kernels, small: &power * ainv, large: power, small_factor, large_factor, npd })
    }

    fn integrate(&self, x: &[C64]) -> (f64, f64) {
        let l1 = NormSpec::lp(1.0);
        let terms: Vec<f64> = self.kernels.iter().map(|(w, k)| w * l1.norm(&k.apply(x))).collect();
        let body = crate::linalg::pairwise_sum_scalar(&terms);
        let tails = self.small_factor * l1.norm(&self.small.apply(x)) + self.large_factor * l1.norm(&self.large.apply(x));
        (body + tails, tails)
    }
}

fn check_l1(norm: &NormSpec, d: usize) -> Result<()> {
    norm.check_dim(d)?;
    match norm {
        NormSpec::Lp { p } if *p == 1.0 => Ok(()),
        _ => Err(Error::InvalidInput(format!("the absolute integral is defined on ℓ1 only, got {norm:?}"))),
    }
}

/// `∫_{Γ_ν} ||A^s R(ζ,A) x||_1 |dζ| / |ζ|^s` by the trapezoid rule in `ln|ζ|`
/// on a window `[10^{-6}/||A^{-1}||, 10^6 ||A||]`, with the tails added from
/// `A^s R(ζ,A) ≈ -A^{s-1}` near 0 and `≈ A^s / ζ` near ∞.
pub fn gt_absolute_integral(
    a: &OperatorMatrix,
    s: FractionalExponent,
    nu: f64,
    x: &[C64],
    norm: &NormSpec,
    nodes_per_decade: Option<usize>,
) -> Result<GtResult> {
    check_l1(norm, a.dim())?;
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!("vector of length {} for dimension {}", x.len(), a.dim())));
    }
    let q = GtQuadrature::new(a, s, nu, nodes_per_decade)?;
    let xn = norm.norm(x);
    let (value, tails) = if xn == 0.0 { (0.0, 0.0) } else { q.integrate(x) };
    Ok(GtResult {
        value,
        ratio: (xn > 0.0).then(|| value / xn),
        tails,
        nodes: q.kernels.len(),
        nodes_per_decade: q.npd,
    })
}

/// Range of `value / ||x||_1` over `samples` random ℓ1-unit vectors.
pub fn gt_ratio_interval(
    a: &OperatorMatrix,
    s: FractionalExponent,
    nu: f64,
    samples: usize,
    seed: u64,
    nodes_per_decade: Option<usize>,
) -> Result<GtInterval> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let q = GtQuadrature::new(a, s, nu, nodes_per_decade)?;
    let l1 = NormSpec::lp(1.0);
    let mut rng = stream(seed, 0x6770);
    let xs: Vec<Vec<C64>> = (0..samples)
        .map(|_| {
            let v = gaussian_vector(&mut rng, a.dim());
            let n = l1.norm(&v);
            v.into_iter().map(|z| z / n).collect()
        })
        .collect();
    let ratios: Vec<f64> = xs.par_iter().map(|x| q.integrate(x).0).collect();
    let (mut imin, mut imax) = (0, 0);
    for (i, r) in ratios.iter().enumerate() {
        if *r < ratios[imin] {
            imin = i;
        }
        if *r > ratios[imax] {
            imax = i;
        }
    }
    Ok(GtInterval {
        min: ratios[imin],
        max: ratios[imax],
        samples,
        seed,
        nodes_per_decade: q.npd,
        argmin: vector_json(&xs[imin]),
        argmax: vector_json(&xs[imax]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, real_diag};

    fn half() -> FractionalExponent {
        FractionalExponent::new(0.5).unwrap()
    }

    #[test]
    fn scalar_integral_is_scale_free() {
        let l1 = NormSpec::lp(1.0);
        let vals: Vec<f64> = [0.5, 1.0, 5.0]
            .iter()
            .map(|&a| gt_absolute_integral(&OperatorMatrix::new(real_diag(&[a])).unwrap(), half(), 2.0, &[c(1.0, 0.0)], &l1, None).unwrap().value)
            .collect();
        for v in &vals {
            assert!((v - vals[1]).abs() <= 0.01 * vals[1], "{vals:?}");
        }
    }

    #[test]
    fn scalar_integral_matches_closed_form() {
        // a = 1, s = 1/2, ν = π/2: 2 ∫_0^∞ r^{-1/2} / |i r - 1| dr
        // = 2 ∫_0^∞ r^{-1/2} (1 + r²)^{-1/2} dr = 2 Γ(1/4)² / (2 √π).
        let l1 = NormSpec::lp(1.0);
        let v = gt_absolute_integral(&OperatorMatrix::new(identity(1)).unwrap(), half(), PI / 2.0, &[c(1.0, 0.0)], &l1, None)
            .unwrap()
            .value;
        let gamma_quarter = 3.625_609_908_221_908_3_f64;
        let exact = gamma_quarter * gamma_quarter / PI.sqrt();
        assert!((v - exact).abs() < 1e-6 * exact, "{v} vs {exact}");
    }

    #[test]
    fn zero_vector_and_identity_factorization() {
        let l1 = NormSpec::lp(1.0);
        let i2 = OperatorMatrix::new(identity(2)).unwrap();
        let z = gt_absolute_integral(&i2, half(), 1.0, &[c(0.0, 0.0); 2], &l1, None).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.ratio.is_none());
        let one = gt_absolute_integral(&OperatorMatrix::new(identity(1)).unwrap(), half(), 1.0, &[c(1.0, 0.0)], &l1, None).unwrap();
        let x = [c(0.3, -1.0), c(2.0, 0.5)];
        let two = gt_absolute_integral(&i2, half(), 1.0, &x, &l1, None).unwrap();
        assert!((two.value - one.value * l1.norm(&x)).abs() < 1e-10 * two.value);
    }

    #[test]
    fn preconditions() {
        let a = OperatorMatrix::new(real_diag(&[1.0, 2.0])).unwrap();
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        assert!(gt_absolute_integral(&a, half(), 1.0, &x, &NormSpec::l2(), None).is_err());
        let rot = OperatorMatrix::diagonal(&[C64::from_polar(1.0, 1.2), c(1.0, 0.0)]).unwrap();
        assert!(matches!(gt_absolute_integral(&rot, half(), 1.0, &x, &NormSpec::lp(1.0), None), Err(Error::NotSectorial(_))));
    }

    #[test]
    fn interval_is_stable_under_refinement() {
        let a = crate::generators::random_diagonalizable(5, &crate::generators::RandomSpec { dim: 8, ..Default::default() }).unwrap();
        let coarse = gt_ratio_interval(&a, half(), 1.2, 40, 9, Some(40)).unwrap();
        let fine = gt_ratio_interval(&a, half(), 1.2, 40, 9, Some(80)).unwrap();
        assert!(coarse.min > 0.0 && coarse.min <= coarse.max);
        assert!((coarse.min - fine.min).abs() <= 0.01 * fine.min);
        assert!((coarse.max - fine.max).abs() <= 0.01 * fine.max);
    }
}
