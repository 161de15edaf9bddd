//! Seeded random operators: sector spectra, controlled eigenbases, commuting
//! pairs and Jordan blocks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, diag, inverse, CMat, C64};
use crate::operators::OperatorMatrix;
use crate::search::{gaussian_vector, stream};

/// Haar-distributed unitary (QR of a complex Gaussian with the phases of
/// `R`'s diagonal divided out).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = CMat::from_column_slice(d, d, &gaussian_vector(rng, d * d));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let p = r[(j, j)];
        if p.norm() > 0.0 {
            let ph = p / p.norm();
            for i in 0..d {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// `d` points `r e^{iθ}` with `log r` uniform on `[log r_lo, log r_hi]` and
/// `θ` uniform on `[-angle, angle]`.
pub fn sector_spectrum<R: Rng + ?Sized>(rng: &mut R, d: usize, angle: f64, r_lo: f64, r_hi: f64) -> Vec<C64> {
    (0..d)
        .map(|_| {
            let r = (r_lo.ln() + (r_hi.ln() - r_lo.ln()) * rng.random::<f64>()).exp();
            let th = if angle > 0.0 { rng.random_range(-angle..=angle) } else { 0.0 };
            C64::from_polar(r, th)
        })
        .collect()
}

/// Invertible matrix with 2-norm condition number at most `max_cond`:
/// `U diag(s) W` with `s` log-uniform in `[1, max_cond]`.
pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, d: usize, max_cond: f64) -> CMat {
    let u = random_unitary(rng, d);
    let w = random_unitary(rng, d);
    let s: Vec<C64> = (0..d).map(|_| c(max_cond.max(1.0).powf(rng.random::<f64>()), 0.0)).collect();
    u * diag(&s) * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSpec {
    pub dim: usize,
    /// Spectrum lies in the closed sector of this half-angle.
    pub angle: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    /// Eigenbasis condition bound; 1 gives a normal matrix.
    pub max_cond: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { dim: 4, angle: std::f64::consts::FRAC_PI_6, r_lo: 0.1, r_hi: 10.0, max_cond: 10.0 }
    }
}

fn check(spec: &RandomSpec) -> Result<()> {
    if spec.dim == 0 || !(spec.r_lo > 0.0 && spec.r_hi >= spec.r_lo) || !(0.0..std::f64::consts::PI).contains(&spec.angle) {
        return Err(Error::InvalidInput(format!("bad random operator spec {spec:?}")));
    }
    Ok(())
}

/// `V diag(λ) V^{-1}` with a sector spectrum and a controlled eigenbasis.
pub fn random_diagonalizable(seed: u64, spec: &RandomSpec) -> Result<OperatorMatrix> {
    check(spec)?;
    let mut rng = stream(seed, 0xd1a6);
    let lam = sector_spectrum(&mut rng, spec.dim, spec.angle, spec.r_lo, spec.r_hi);
    let v = if spec.max_cond <= 1.0 { random_unitary(&mut rng, spec.dim) } else { random_basis(&mut rng, spec.dim, spec.max_cond) };
    let vi = inverse(&v).ok_or_else(|| Error::InvalidInput("singular eigenbasis".into()))?;
    OperatorMatrix::new(&v * diag(&lam) * vi)
}

/// Commuting pair sharing one eigenbasis; spectra in sectors of half-angles
/// `angle_a` and `angle_b`.
pub fn commuting_pair(seed: u64, spec: &RandomSpec, angle_b: f64) -> Result<(OperatorMatrix, OperatorMatrix)> {
    check(spec)?;
    check(&RandomSpec { angle: angle_b, ..*spec })?;
    let mut rng = stream(seed, 0xc0a1);
    let la = sector_spectrum(&mut rng, spec.dim, spec.angle, spec.r_lo, spec.r_hi);
    let lb = sector_spectrum(&mut rng, spec.dim, angle_b, spec.r_lo, spec.r_hi);
    let v = if spec.max_cond <= 1.0 { random_unitary(&mut rng, spec.dim) } else { random_basis(&mut rng, spec.dim, spec.max_cond) };
    let vi = inverse(&v).ok_or_else(|| Error::InvalidInput("singular eigenbasis".into()))?;
    Ok((OperatorMatrix::new(&v * diag(&la) * &vi)?, OperatorMatrix::new(&v * diag(&lb) * vi)?))
}

/// `λ I + off · N` with `N` the nilpotent shift.
pub fn jordan_block(d: usize, lambda: C64, off: f64) -> Result<OperatorMatrix> {
    OperatorMatrix::new(CMat::from_fn(d, d, |i, j| {
        if i == j {
            lambda
        } else if j == i + 1 {
            c(off, 0.0)
        } else {
            c(0.0, 0.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator_norm, cond2, identity, rel_err};

    #[test]
    fn unitary_is_unitary() {
        let q = random_unitary(&mut stream(1, 0), 5);
        assert!(rel_err(&(q.adjoint() * &q), &identity(5)) < 1e-12);
    }

    #[test]
    fn basis_condition_is_bounded() {
        let v = random_basis(&mut stream(2, 0), 6, 100.0);
        assert!(cond2(&v) <= 100.0 * (1.0 + 1e-9));
    }

    #[test]
    fn generated_operators_respect_their_spec() {
        let spec = RandomSpec { dim: 5, angle: 0.5, ..Default::default() };
        let a = random_diagonalizable(3, &spec).unwrap();
        assert!(a.spectral_angle().unwrap() <= 0.5 + 1e-9);
        assert!(a.eigen().condition < 1e3);
        let (x, y) = commuting_pair(4, &spec, 1.0).unwrap();
        assert!(commutator_norm(x.matrix(), y.matrix()) <= 1e-10 * x.norm2() * y.norm2());
        assert!(y.spectral_angle().unwrap() <= 1.0 + 1e-9);
        assert_eq!(random_diagonalizable(3, &spec).unwrap(), a);
    }
}
