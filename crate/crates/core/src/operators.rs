//! Matrices as sectorial operators: resolvents, angles, the sectoriality
//! constant, fractional powers and the approximate identity `V_n`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::functions::{phi_n, ScalarFunction};
use crate::json::MatrixJson;
use crate::linalg::{eigen, fro, identity, inverse, min_singular, norm2, CMat, EigenData, C64};
use crate::norms::NormSpec;

/// A dense complex matrix standing in for a sectorial operator. Eigendata and
/// norms are computed on first use and cached.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct OperatorMatrix {
    m: CMat,
    eig: OnceLock<EigenData>,
    norm: OnceLock<f64>,
    inv_norm: OnceLock<f64>,
}

impl TryFrom<MatrixJson> for OperatorMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        OperatorMatrix::new(j.to_matrix()?)
    }
}

impl From<OperatorMatrix> for MatrixJson {
    fn from(a: OperatorMatrix) -> Self {
        MatrixJson::from(&a.m)
    }
}

impl PartialEq for OperatorMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

/// Eigenvector condition above which the eigen route is abandoned.
pub const MAX_EIGEN_CONDITION: f64 = 1e8;

impl OperatorMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        if !crate::linalg::is_finite(&m) {
            return Err(Error::InvalidInput("operator entries must be finite".into()));
        }
        Ok(OperatorMatrix { m, eig: OnceLock::new(), norm: OnceLock::new(), inv_norm: OnceLock::new() })
    }

    pub fn from_real_rows(d: usize, rows: &[f64]) -> Result<Self> {
        Self::new(crate::linalg::from_real_rows(d, rows))
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        Self::new(crate::linalg::diag(values))
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn eigen(&self) -> &EigenData {
        self.eig.get_or_init(|| eigen(&self.m))
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.eigen().is_diagonalizable(MAX_EIGEN_CONDITION)
    }

    /// `||A||₂`.
    pub fn norm2(&self) -> f64 {
        *self.norm.get_or_init(|| norm2(&self.m))
    }

    /// `||A^{-1}||₂`, infinite for singular `A`.
    pub fn inverse_norm2(&self) -> f64 {
        *self.inv_norm.get_or_init(|| {
            let s = min_singular(&self.m);
            if s > 0.0 {
                1.0 / s
            } else {
                f64::INFINITY
            }
        })
    }

    pub fn scaled(&self, t: f64) -> OperatorMatrix {
        OperatorMatrix::new(&self.m * C64::new(t, 0.0)).expect("scaling keeps the matrix valid")
    }

    pub fn spectral_angle(&self) -> Result<f64> {
        spectral_angle(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub angle: f64,
}

impl Sector {
    pub fn new(angle: f64) -> Result<Self> {
        if angle > 0.0 && angle < PI {
            Ok(Sector { angle })
        } else {
            Err(Error::InvalidInput(format!("sector angle {angle} outside (0, pi)")))
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.norm() > 0.0 && z.arg().abs() < self.angle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalExponent {
    pub s: f64,
}

impl FractionalExponent {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(FractionalExponent { s })
        } else {
            Err(Error::InvalidInput(format!("fractional exponent {s} outside (0, 1)")))
        }
    }
}

/// Relative spectrum-proximity threshold for rejecting a resolvent.
pub const RESOLVENT_TOLERANCE: f64 = 1e-12;

/// `(λI - A)^{-1}`.
pub fn resolvent(a: &OperatorMatrix, lambda: C64) -> Result<CMat> {
    resolvent_scaled(a.matrix(), lambda, RESOLVENT_TOLERANCE * a.norm2())
}

/// Resolvent with an absolute threshold on `σ_min(λI - A)`. The cheap lower
/// bound `1/||(λI - A)^{-1}||_F` settles almost every call; the exact
/// smallest singular value is computed only near the threshold.
pub(crate) fn resolvent_scaled(a: &CMat, lambda: C64, threshold: f64) -> Result<CMat> {
    let d = a.nrows();
    let mut shifted = -a.clone();
    for i in 0..d {
        shifted[(i, i)] += lambda;
    }
    let inv = match inverse(&shifted) {
        Some(inv) if crate::linalg::is_finite(&inv) => inv,
        _ => return Err(Error::SingularResolvent { lambda, sigma_min: 0.0 }),
    };
    let lower = 1.0 / fro(&inv);
    if lower < threshold * (d as f64).sqrt() {
        let sigma_min = min_singular(&shifted);
        if sigma_min < threshold {
            return Err(Error::SingularResolvent { lambda, sigma_min });
        }
    }
    Ok(inv)
}

/// Arguments within this distance of ±π count as lying on the negative axis.
const AXIS_TOLERANCE: f64 = 1e-9;

/// `max |arg λ_i|`.
pub fn spectral_angle(a: &OperatorMatrix) -> Result<f64> {
    let scale = a.norm2();
    let mut worst: f64 = 0.0;
    for &l in &a.eigen().values {
        if l.norm() <= 1e-12 * scale {
            return Err(Error::NotSectorial(format!("eigenvalue {l} is (numerically) zero")));
        }
        let arg = l.arg().abs();
        if arg >= PI - AXIS_TOLERANCE {
            return Err(Error::NotSectorial(format!("eigenvalue {l} lies on the negative real axis")));
        }
        worst = worst.max(arg);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGrid {
    pub radii_per_decade: usize,
    pub angles: usize,
    /// Decades beyond `[1/||A^{-1}||, ||A||]` covered on each side.
    pub margin_decades: f64,
    pub refine: bool,
}

impl Default for SectorGrid {
    fn default() -> Self {
        SectorGrid { radii_per_decade: 16, angles: 8, margin_decades: 4.0, refine: true }
    }
}

const REFINE_MAX_MOVES: usize = 500;

/// `sup ||ζ R(ζ,A)||` over `|arg ζ| >= σ`, on a log-radial × angular grid
/// anchored at `1/||A^{-1}||` (so the grid moves with `A -> tA`) and then
/// refined by a pattern search around the best node.
pub fn sectorial_constant(a: &OperatorMatrix, sigma: Sector, norm: &NormSpec, grid: &SectorGrid) -> Result<BoundEstimate> {
    norm.validate()?;
    norm.check_dim(a.dim())?;
    let omega = spectral_angle(a)?;
    if sigma.angle <= omega {
        return Err(Error::NotSectorial(format!("sector angle {} does not exceed spectral angle {omega}", sigma.angle)));
    }
    let lo = 10f64.powf(-grid.margin_decades) / a.inverse_norm2();
    let span = (a.norm2() * a.inverse_norm2()).log10() + 2.0 * grid.margin_decades;
    let nr = (span * grid.radii_per_decade as f64).ceil() as usize + 1;
    let na = grid.angles.max(2);
    let dtheta = (PI - sigma.angle) / (na - 1) as f64;
    let du = std::f64::consts::LN_10 / grid.radii_per_decade as f64;
    let value_at = |u: f64, theta: f64| -> Result<f64> {
        let zeta = C64::from_polar(u.exp(), theta);
        let r = resolvent(a, zeta)?;
        Ok(norm.operator_norm(&(r * zeta)))
    };
    let mut evaluations = 0;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..nr {
        let u = lo.ln() + i as f64 * du;
        for j in 0..na {
            for sign in [1.0, -1.0] {
                let theta = sign * (sigma.angle + j as f64 * dtheta);
                let v = value_at(u, theta)?;
                evaluations += 1;
                if v > best.0 {
                    best = (v, u, theta);
                }
            }
        }
    }
    if grid.refine {
        let (mut su, mut st) = (du, dtheta.max(1e-3));
        let clamp = |t: f64| t.signum() * t.abs().clamp(sigma.angle, PI);
        // The supremum may only be approached at 0 or ∞, where every step
        // improves; cap the walk.
        let mut moves = 0;
        while (su > 1e-10 || st > 1e-10) && moves < REFINE_MAX_MOVES {
            moves += 1;
            let mut moved = false;
            for (pu, pt) in [(su, 0.0), (-su, 0.0), (0.0, st), (0.0, -st)] {
                let (u, t) = (best.1 + pu, clamp(best.2 + pt));
                let v = value_at(u, t)?;
                evaluations += 1;
                if v > best.0 {
                    best = (v, u, t);
                    moved = true;
                }
            }
            if !moved {
                su *= 0.5;
                st *= 0.5;
            }
        }
    }
    let zeta = C64::from_polar(best.1.exp(), best.2);
    let mut method = MethodInfo::new(if grid.refine { "grid+refine" } else { "grid" });
    method.samples = nr * na * 2;
    method.evaluations = evaluations;
    Ok(BoundEstimate::new(best.0, Witness::Point { zeta: zeta.into() }, method, true))
}

/// `V_n = φ_n(A) = n(nI + A)^{-1} - (I + nA)^{-1}`.
pub fn approximate_identity(a: &OperatorMatrix, n: f64) -> Result<CMat> {
    let d = a.dim();
    let i = identity(d);
    let first = inverse(&(&i * C64::new(n, 0.0) + a.matrix()))
        .ok_or(Error::SingularResolvent { lambda: C64::new(-n, 0.0), sigma_min: 0.0 })?;
    let second = inverse(&(&i + a.matrix() * C64::new(n, 0.0)))
        .ok_or(Error::SingularResolvent { lambda: C64::new(-1.0 / n, 0.0), sigma_min: 0.0 })?;
    Ok(first * C64::new(n, 0.0) - second)
}

pub fn phi(n: f64, z: C64) -> C64 {
    phi_n(n, z)
}

/// `z^s (e^{iρ} - z)^{-1}` on the principal branch.
pub fn h_s_rho(z: C64, s: FractionalExponent, rho: f64) -> Result<C64> {
    let pole = C64::from_polar(1.0, rho);
    let distance = (z - pole).norm();
    if distance < 1e-12 {
        return Err(Error::PoleHit { z, distance });
    }
    Ok(crate::functions::h_s_rho_value(z, s.s, rho))
}

/// Principal `A^s`: the eigen route for well-conditioned eigenbases, else
/// `A^s = ||A||^s [B^s R(-1,B)](-I - B)` with `B = A/||A||` and the bracket
/// computed by contour quadrature of `ζ^s/(-1 - ζ)`.
pub fn fractional_power(a: &OperatorMatrix, s: FractionalExponent) -> Result<CMat> {
    let omega = spectral_angle(a)?;
    let s = s.s;
    if a.is_diagonalizable() {
        return Ok(a.eigen().apply(|z| z.powf(s)));
    }
    fractional_power_contour(a, s, omega)
}

pub(crate) fn fractional_power_contour(a: &OperatorMatrix, s: f64, omega: f64) -> Result<CMat> {
    let l = a.norm2();
    let b = a.scaled(1.0 / l);
    let sigma = 0.5 * (omega + PI);
    let kappa = 1.0 - (PI - sigma).cos().max(0.0);
    let f = ScalarFunction::new(format!("z^{s}/(-1-z)"), sigma, move |z| z.powf(s) / (-1.0 - z))
        .with_decay(1.0 / kappa.sqrt(), s.min(1.0 - s));
    let bsr = crate::calculus::contour_fcalc(&b, &f, None)?.value;
    let minus_one_minus_b = -(identity(a.dim()) + b.matrix());
    Ok(bsr * minus_one_minus_b * C64::new(l.powf(s), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_diag, rel_err};

    fn op(m: CMat) -> OperatorMatrix {
        OperatorMatrix::new(m).unwrap()
    }

    #[test]
    fn resolvent_examples() {
        let a = op(real_diag(&[1.0]));
        assert!((resolvent(&a, c(-1.0, 0.0)).unwrap()[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
        let a2 = op(real_diag(&[1.0, 2.0]));
        let r = resolvent(&a2, c(0.0, 3.0)).unwrap();
        assert!((r[(0, 0)] - 1.0 / c(-1.0, 3.0)).norm() < 1e-15);
        assert!((r[(1, 1)] - 1.0 / c(-2.0, 3.0)).norm() < 1e-15);
        assert!(matches!(resolvent(&a, c(1.0, 0.0)), Err(Error::SingularResolvent { .. })));
    }

    #[test]
    fn spectral_angle_examples() {
        let a = op(crate::linalg::diag(&[C64::from_polar(1.0, PI / 4.0), C64::from_polar(1.0, -PI / 4.0)]));
        assert!((spectral_angle(&a).unwrap() - PI / 4.0).abs() < 1e-14);
        let j = OperatorMatrix::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(spectral_angle(&j).unwrap().abs() < 1e-14);
        let bad = op(real_diag(&[1.0, -1.0]));
        assert!(matches!(spectral_angle(&bad), Err(Error::NotSectorial(_))));
    }

    #[test]
    fn approximate_identity_examples() {
        let a = op(real_diag(&[1.0, 3.0]));
        assert!(fro(&approximate_identity(&a, 1.0).unwrap()) < 1e-15);
        assert!((phi(2.0, c(1.0, 0.0)) - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fractional_power_examples() {
        let a = op(real_diag(&[1.0, 9.0]));
        let p = fractional_power(&a, FractionalExponent::new(0.5).unwrap()).unwrap();
        assert!(rel_err(&p, &real_diag(&[1.0, 3.0])) < 1e-14);
        let j = OperatorMatrix::from_real_rows(2, &[2.0, 1.0, 0.0, 2.0]).unwrap();
        assert!(!j.is_diagonalizable());
        let p = fractional_power(&j, FractionalExponent::new(0.5).unwrap()).unwrap();
        let r2 = 2f64.sqrt();
        let exact = crate::linalg::from_real_rows(2, &[r2, 1.0 / (2.0 * r2), 0.0, r2]);
        assert!(rel_err(&p, &exact) < 1e-9, "{p}");
    }

    #[test]
    fn h_s_rho_pole_is_reported() {
        let s = FractionalExponent::new(0.5).unwrap();
        let v = h_s_rho(c(1.0, 0.0), s, PI / 2.0).unwrap();
        assert!((v - c(-0.5, -0.5)).norm() < 1e-15);
        assert!(matches!(h_s_rho(C64::from_polar(1.0, 0.3), s, 0.3), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn sectorial_constant_of_identity() {
        let a = op(identity(1));
        let g = SectorGrid::default();
        let v = sectorial_constant(&a, Sector::new(PI / 2.0).unwrap(), &NormSpec::l2(), &g).unwrap();
        assert!((v.value - 1.0).abs() < 1e-6, "{}", v.value);
        let w = sectorial_constant(&a, Sector::new(PI / 2.0 + 0.3).unwrap(), &NormSpec::l2(), &g).unwrap();
        assert!(w.value <= v.value + 1e-12);
    }
}
