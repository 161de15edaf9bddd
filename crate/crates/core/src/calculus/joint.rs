use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{nodes_per_decade_for, ContourSpec, Node};
use crate::error::{Error, Result};
use crate::functions::{phi_n, BivariateFunction};
use crate::linalg::{commutator_norm, inverse, pairwise_sum, CMat, C64, ZERO};
use crate::operators::{approximate_identity, resolvent_scaled, spectral_angle, OperatorMatrix, RESOLVENT_TOLERANCE};

use super::scalar::scalar_tail;

#[derive(Debug, Clone)]
pub struct JointOptions {
    /// Explicit contours for `A` and `B`; chosen from the function's
    /// singularities otherwise.
    pub contours: Option<(ContourSpec, ContourSpec)>,
    /// Use `φ_n(w)² φ_n(z)² f` with this `n`; the default is the direct route
    /// for jointly decaying `f` and `n = 2` otherwise.
    pub regularization: Option<f64>,
    pub tol: f64,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions { contours: None, regularization: None, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JointResult {
    #[serde(with = "crate::json::matrix")]
    pub value: CMat,
    pub regularization: Option<f64>,
    pub nodes: (usize, usize),
    pub contours: (ContourSpec, ContourSpec),
}

/// `||AB - BA|| <= 1e-10 ||A|| ||B||`.
pub fn check_commuting(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("pair dims {} and {}", a.dim(), b.dim())));
    }
    let c = commutator_norm(a.matrix(), b.matrix());
    if c > 1e-10 * a.norm2() * b.norm2() {
        return Err(Error::NonCommuting(c));
    }
    Ok(())
}

/// `f(A,B) = (-1/2πi)² ∫∫ f(ζ,η) R(ζ,A) R(η,B) dζ dη` over `Γ_{ν_A} × Γ_{ν_B}`.
///
/// Bounded `f` is handled through `g = φ_n(w)² φ_n(z)² f`, which decays in
/// each variable; then `f(A,B) = g(A,B) V_n(A)^{-2} V_n(B)^{-2}`.
pub fn joint_fcalc(a: &OperatorMatrix, b: &OperatorMatrix, f: &BivariateFunction, opts: &JointOptions) -> Result<JointResult> {
    check_commuting(a, b)?;
    let (oa, ob) = (spectral_angle(a)?, spectral_angle(b)?);
    let (mut nu_a, mut nu_b, margin) = f.contour_angles(oa, ob)?;
    if let Some((ca, cb)) = &opts.contours {
        nu_a = ca.angle;
        nu_b = cb.angle;
    }
    let reg = match (opts.regularization, f.decay) {
        (Some(n), _) => Some(n),
        (None, Some(_)) => None,
        (None, None) => Some(2.0),
    };
    let (c, eps) = match reg {
        None => {
            let d = f.decay.expect("direct route needs a certificate");
            (d.c, d.eps)
        }
        Some(n) => {
            let cphi = |nu: f64| (n * n - 1.0) / (n * (1.0 - (std::f64::consts::PI - nu).cos().max(0.0)));
            let bound = sampled_contour_sup(f, nu_a, nu_b);
            (bound * cphi(nu_a).powi(2) * cphi(nu_b).powi(2), 2.0)
        }
    };
    let c_var = 2.0 * c.sqrt();
    let (spec_a, spec_b) = match &opts.contours {
        Some((ca, cb)) => {
            ca.check_admissible(oa, std::f64::consts::PI)?;
            cb.check_admissible(ob, std::f64::consts::PI)?;
            (ca.clone(), cb.clone())
        }
        None => {
            let npd = nodes_per_decade_for(margin);
            let tol = opts.tol * c_var.max(1.0);
            let (lo_a, hi_a) = scalar_tail(a, c_var, eps).window(tol);
            let (lo_b, hi_b) = scalar_tail(b, c_var, eps).window(tol);
            (ContourSpec::new(nu_a, npd, lo_a, hi_a)?, ContourSpec::new(nu_b, npd, lo_b, hi_b)?)
        }
    };
    let (na, nb) = (spec_a.nodes(), spec_b.nodes());
    let d = a.dim();
    let ra = resolvents(a, &na, false)?;
    let rb = resolvents(b, &nb, true)?;
    let g = |w: C64, z: C64| -> C64 {
        match reg {
            None => f.eval(w, z),
            Some(n) => {
                let p = phi_n(n, w) * phi_n(n, z);
                f.eval(w, z) * p * p
            }
        }
    };
    let terms: Vec<CMat> = na
        .par_iter()
        .zip(ra.par_iter())
        .map(|(ni, rai)| {
            let mut acc = vec![ZERO; d * d];
            for (nj, rbj) in nb.iter().zip(&rb) {
                let fij = ni.weight * g(ni.zeta, nj.zeta);
                for (x, y) in acc.iter_mut().zip(rbj.as_slice()) {
                    *x += fij * y;
                }
            }
            rai * CMat::from_column_slice(d, d, &acc)
        })
        .collect();
    let mut value = pairwise_sum(&terms, d, d);
    if let Some(n) = reg {
        let via = inverse(&approximate_identity(a, n)?).ok_or_else(|| Error::NoConvergence("V_n(A) singular".into()))?;
        let vib = inverse(&approximate_identity(b, n)?).ok_or_else(|| Error::NoConvergence("V_n(B) singular".into()))?;
        value = value * &via * &via * &vib * &vib;
    }
    Ok(JointResult { value, regularization: reg, nodes: (na.len(), nb.len()), contours: (spec_a, spec_b) })
}

fn resolvents(a: &OperatorMatrix, nodes: &[Node], weighted: bool) -> Result<Vec<CMat>> {
    let threshold = RESOLVENT_TOLERANCE * a.norm2();
    nodes
        .par_iter()
        .map(|n| {
            let r = resolvent_scaled(a.matrix(), n.zeta, threshold)?;
            Ok(if weighted { r * n.weight } else { r })
        })
        .collect()
}

/// Sup of `|f|` over a log grid of both contours.
fn sampled_contour_sup(f: &BivariateFunction, nu_a: f64, nu_b: f64) -> f64 {
    let pts = |nu: f64| -> Vec<C64> {
        (0..49)
            .flat_map(|i| {
                let r = 10f64.powf(-6.0 + 0.25 * i as f64);
                [C64::from_polar(r, nu), C64::from_polar(r, -nu)]
            })
            .collect()
    };
    let (pa, pb) = (pts(nu_a), pts(nu_b));
    let mut sup: f64 = 0.0;
    for &w in &pa {
        for &z in &pb {
            sup = sup.max(f.eval(w, z).norm());
        }
    }
    1.05 * sup.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, real_diag, rel_err};

    fn op(m: CMat) -> OperatorMatrix {
        OperatorMatrix::new(m).unwrap()
    }

    #[test]
    fn phi_product_of_scalars() {
        let f = BivariateFunction::phi_product(2.0, 0.9 * std::f64::consts::PI);
        let r = joint_fcalc(&op(identity(1)), &op(identity(1)), &f, &JointOptions::default()).unwrap();
        assert!(r.regularization.is_none());
        assert!((r.value[(0, 0)] - c(1.0 / 9.0, 0.0)).norm() < 1e-10, "{}", r.value);
    }

    #[test]
    fn w_over_sum_examples() {
        let f = BivariateFunction::w_over_sum();
        let r = joint_fcalc(&op(identity(2)), &op(identity(2)), &f, &JointOptions::default()).unwrap();
        assert!(rel_err(&r.value, &(identity(2) * c(0.5, 0.0))) < 1e-9);
        let r = joint_fcalc(&op(real_diag(&[1.0, 2.0])), &op(real_diag(&[3.0, 4.0])), &f, &JointOptions::default()).unwrap();
        assert!(rel_err(&r.value, &real_diag(&[0.25, 1.0 / 3.0])) < 1e-9, "{}", r.value);
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let a = op(crate::linalg::from_real_rows(2, &[1.0, 1.0, 0.0, 2.0]));
        let b = op(crate::linalg::from_real_rows(2, &[1.0, 0.0, 1.0, 2.0]));
        let f = BivariateFunction::w_over_sum();
        assert!(matches!(joint_fcalc(&a, &b, &f, &JointOptions::default()), Err(Error::NonCommuting(_))));
    }
}
