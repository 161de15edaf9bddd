//! Scalar, bivariate and operator-valued functions on sectors.
//!
//! Built-ins carry their analytic decay certificates `|f(z)| <= C ρ(|z|)^ε`
//! with `ρ(r) = r / (1 + r²)`, derived from lower bounds for the distance
//! between the sector and the poles.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::Cplx;
use crate::linalg::{commutator_norm, fro, CMat, C64, ONE};

pub fn rho(r: f64) -> f64 {
    r / (1.0 + r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub c: f64,
    pub eps: f64,
}

impl DecayCertificate {
    pub fn new(c: f64, eps: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && eps > 0.0 && eps <= 2.0) {
            return Err(Error::InvalidInput(format!("bad decay certificate C = {c}, eps = {eps}")));
        }
        Ok(DecayCertificate { c, eps })
    }

    pub fn envelope(&self, r: f64) -> f64 {
        self.c * rho(r).powf(self.eps)
    }
}

/// `1 - max(cos θ, 0)` for the angular gap θ between a sector and a pole ray;
/// `|z - w| >= sqrt(gap_factor) * sqrt(|z|² + |w|²)` for such points.
fn gap_factor(theta: f64) -> f64 {
    1.0 - theta.cos().max(0.0)
}

pub type ScalarFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub struct ScalarFunction {
    pub name: String,
    /// The function is bounded and analytic on the open sector of this angle.
    pub domain_angle: f64,
    pub decay: Option<DecayCertificate>,
    /// Known bound for `|f|` on the sector, if any.
    pub bound: Option<f64>,
    eval: ScalarFn,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("name", &self.name)
            .field("domain_angle", &self.domain_angle)
            .field("decay", &self.decay)
            .field("bound", &self.bound)
            .finish()
    }
}

/// `count_r` log-spaced radii in `[1e-4, 1e4]` times `count_a` angles in
/// `[-angle, angle]`.
pub fn sector_sample(angle: f64, count_r: usize, count_a: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(count_r * count_a);
    for i in 0..count_r {
        let r = 10f64.powf(-4.0 + 8.0 * i as f64 / (count_r - 1).max(1) as f64);
        for j in 0..count_a {
            let th = -angle + 2.0 * angle * j as f64 / (count_a - 1).max(1) as f64;
            out.push(C64::from_polar(r, th));
        }
    }
    out
}

impl ScalarFunction {
    pub fn new(name: impl Into<String>, domain_angle: f64, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        ScalarFunction { name: name.into(), domain_angle, decay: None, bound: None, eval: Arc::new(f) }
    }

    pub fn with_decay(mut self, c: f64, eps: f64) -> Self {
        self.decay = Some(DecayCertificate { c, eps });
        self
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.bound = Some(b);
        self
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.eval)(z)
    }

    /// Sup of `|f|` over the 1000-point sector sample.
    pub fn sampled_sup(&self, angle: f64) -> f64 {
        sector_sample(angle, 40, 25).into_iter().map(|z| self.eval(z).norm()).fold(0.0, f64::max)
    }

    /// The stated bound, or the sampled sup with a 5% allowance.
    pub fn sup_bound(&self) -> f64 {
        self.bound.unwrap_or_else(|| 1.05 * self.sampled_sup(self.domain_angle * (1.0 - 1e-9)))
    }

    /// Finite on the sector sample and, when certified, no sampled point
    /// exceeds the envelope by more than 5%.
    pub fn validate(&self) -> Result<()> {
        if !(self.domain_angle > 0.0 && self.domain_angle < PI) {
            return Err(Error::InvalidInput(format!("domain angle {} outside (0, pi)", self.domain_angle)));
        }
        for z in sector_sample(self.domain_angle * (1.0 - 1e-9), 40, 25) {
            let v = self.eval(z);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidInput(format!("`{}` is not finite at {z}", self.name)));
            }
            if let Some(d) = self.decay {
                if v.norm() > 1.05 * d.envelope(z.norm()) {
                    return Err(Error::InvalidInput(format!(
                        "`{}` violates its decay certificate at {z}: |f| = {:e} > 1.05 * {:e}",
                        self.name,
                        v.norm(),
                        d.envelope(z.norm())
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pointwise product on the intersection of the domains.
    pub fn product(&self, other: &ScalarFunction) -> ScalarFunction {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let decay = match (self.decay, other.decay, self.bound, other.bound) {
            (Some(a), Some(b), _, _) => Some(DecayCertificate { c: a.c * b.c, eps: (a.eps + b.eps).min(2.0) }),
            (Some(a), None, _, Some(bb)) => Some(DecayCertificate { c: a.c * bb, eps: a.eps }),
            (None, Some(b), Some(ba), _) => Some(DecayCertificate { c: b.c * ba, eps: b.eps }),
            _ => None,
        };
        let bound = match (self.bound, other.bound) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        ScalarFunction {
            name: format!("({})*({})", self.name, other.name),
            domain_angle: self.domain_angle.min(other.domain_angle),
            decay,
            bound,
            eval: Arc::new(move |z| f(z) * g(z)),
        }
    }

    /// `z -> f(t z)` for `t > 0`; `ρ(t r) <= max(t, 1/t) ρ(r)`.
    pub fn dilate(&self, t: f64) -> ScalarFunction {
        let f = self.eval.clone();
        ScalarFunction {
            name: format!("{}(z*{t})", self.name),
            domain_angle: self.domain_angle,
            decay: self.decay.map(|d| DecayCertificate { c: d.c * t.max(1.0 / t).powf(d.eps), eps: d.eps }),
            bound: self.bound,
            eval: Arc::new(move |z| f(z * t)),
        }
    }

    /// `φ_n^power · f`, which is H∞₀ whenever `f` is bounded.
    pub fn regularize(&self, n: f64, power: i32) -> ScalarFunction {
        let phi = phi_function(n, self.domain_angle);
        let mut out = self.clone().with_bound(self.sup_bound());
        for _ in 0..power {
            out = out.product(&phi);
        }
        out
    }
}

/// `φ_n(z) = n/(n+z) - 1/(1+nz)`.
pub fn phi_n(n: f64, z: C64) -> C64 {
    n / (n + z) - ONE / (1.0 + n * z)
}

/// `φ_n = (n² - 1) z / ((n + z)(1 + nz))` with `|n+z||1+nz| >= κ n (1+r²)`.
pub fn phi_function(n: f64, sigma: f64) -> ScalarFunction {
    let kappa = gap_factor(PI - sigma);
    let c = ((n * n - 1.0) / (n * kappa)).max(f64::MIN_POSITIVE);
    let bound = if n == 1.0 { 0.0 } else { c / 2.0 };
    ScalarFunction::new(format!("phi_{n}"), sigma, move |z| phi_n(n, z)).with_decay(c, 1.0).with_bound(bound)
}

/// `h_s^ρ(z) = z^s / (e^{iρ} - z)`, principal branch.
pub fn h_s_rho_value(z: C64, s: f64, rho: f64) -> C64 {
    z.powf(s) / (C64::from_polar(1.0, rho) - z)
}

/// Built-in functions addressable from configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `z^s (e^{iρ} - z)^{-1}`.
    HSRho {
        s: f64,
        rho: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// `z (1 + z)^{-2}`.
    #[serde(rename = "z_over_1pz_sq")]
    ZOver1pzSq {
        #[serde(default)]
        sigma: Option<f64>,
    },
    Phi {
        n: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    One {
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// `z^{ib}`.
    ImagPower {
        b: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// `(λ - z)^{-1}`.
    Resolvent { lambda: Cplx },
    /// `e^{-tz}`.
    Exp {
        t: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
    /// `constant + Σ_k coeffs_k / (z - poles_k)`.
    Rational {
        poles: Vec<Cplx>,
        coeffs: Vec<Cplx>,
        #[serde(default)]
        constant: Option<Cplx>,
    },
    /// `e^{iθ} Π_j (w - a_j)/(1 - conj(a_j) w)` with `w = (z^γ - 1)/(z^γ + 1)`,
    /// `γ = π/(2σ)`: maps `Σ_σ` onto the disk, sup norm exactly 1.
    Blaschke {
        sigma: f64,
        zeros: Vec<Cplx>,
        #[serde(default)]
        rotation: f64,
    },
    Product { factors: Vec<FunctionSpec> },
}

const DEFAULT_SIGMA: f64 = 0.9 * PI;

fn check_sigma(sigma: f64) -> Result<f64> {
    if sigma > 0.0 && sigma < PI {
        Ok(sigma)
    } else {
        Err(Error::InvalidInput(format!("sector angle {sigma} outside (0, pi)")))
    }
}

/// Conformal map of `Σ_σ` onto the unit disk sending 1 to 0.
pub fn sector_to_disk(z: C64, sigma: f64) -> C64 {
    let u = z.powf(PI / (2.0 * sigma));
    (u - 1.0) / (u + 1.0)
}

pub fn blaschke(zeros: &[C64], rotation: f64, sigma: f64) -> ScalarFunction {
    let zs = zeros.to_vec();
    let phase = C64::from_polar(1.0, rotation);
    ScalarFunction::new(format!("blaschke_{}", zeros.len()), sigma, move |z| {
        let w = sector_to_disk(z, sigma);
        zs.iter().fold(phase, |acc, a| acc * (w - a) / (1.0 - a.conj() * w))
    })
    .with_bound(1.0)
}

impl FunctionSpec {
    pub fn build(&self) -> Result<ScalarFunction> {
        match self {
            FunctionSpec::HSRho { s, rho, sigma } => {
                let (s, rho) = (*s, *rho);
                if !(s > 0.0 && s < 1.0) {
                    return Err(Error::InvalidInput(format!("h_s_rho needs 0 < s < 1, got {s}")));
                }
                if !(rho.abs() > 0.0 && rho.abs() < PI) {
                    return Err(Error::InvalidInput(format!("h_s_rho needs 0 < |rho| < pi, got {rho}")));
                }
                let sigma = check_sigma(sigma.unwrap_or(rho.abs() - 0.1))?;
                if sigma >= rho.abs() {
                    return Err(Error::InvalidInput(format!("sector {sigma} must lie inside |rho| = {}", rho.abs())));
                }
                Ok(h_s_rho_function(s, rho, sigma))
            }
            FunctionSpec::ZOver1pzSq { sigma } => {
                let sigma = check_sigma(sigma.unwrap_or(DEFAULT_SIGMA))?;
                let c = 1.0 / gap_factor(PI - sigma);
                Ok(ScalarFunction::new("z/(1+z)^2", sigma, |z| z / ((1.0 + z) * (1.0 + z)))
                    .with_decay(c, 1.0)
                    .with_bound(c / 2.0))
            }
            FunctionSpec::Phi { n, sigma } => {
                if !(*n >= 1.0) {
                    return Err(Error::InvalidInput(format!("phi_n needs n >= 1, got {n}")));
                }
                Ok(phi_function(*n, check_sigma(sigma.unwrap_or(DEFAULT_SIGMA))?))
            }
            FunctionSpec::One { sigma } => {
                Ok(ScalarFunction::new("1", check_sigma(sigma.unwrap_or(DEFAULT_SIGMA))?, |_| ONE).with_bound(1.0))
            }
            FunctionSpec::ImagPower { b, sigma } => {
                let b = *b;
                let sigma = check_sigma(sigma.unwrap_or(DEFAULT_SIGMA))?;
                let ib = C64::new(0.0, b);
                Ok(ScalarFunction::new(format!("z^(i{b})"), sigma, move |z| z.powc(ib))
                    .with_bound((b.abs() * sigma).exp()))
            }
            FunctionSpec::Resolvent { lambda } => {
                let lambda = lambda.0;
                if lambda.norm() == 0.0 {
                    return Err(Error::InvalidInput("resolvent point must be nonzero".into()));
                }
                let sigma = check_sigma(lambda.arg().abs().min(PI - 1e-6))?;
                Ok(ScalarFunction::new(format!("1/({lambda}-z)"), sigma, move |z| ONE / (lambda - z)))
            }
            FunctionSpec::Exp { t, sigma } => {
                let t = *t;
                let sigma = check_sigma(sigma.unwrap_or(PI / 2.0 - 0.05))?;
                if sigma >= PI / 2.0 || t < 0.0 {
                    return Err(Error::InvalidInput("exp(-tz) needs t >= 0 and sigma < pi/2".into()));
                }
                Ok(ScalarFunction::new(format!("exp(-{t}z)"), sigma, move |z| (-t * z).exp()).with_bound(1.0))
            }
            FunctionSpec::Rational { poles, coeffs, constant } => {
                if poles.len() != coeffs.len() || poles.is_empty() {
                    return Err(Error::InvalidInput("rational needs matching nonempty poles/coeffs".into()));
                }
                let poles: Vec<C64> = poles.iter().map(|p| p.0).collect();
                let coeffs: Vec<C64> = coeffs.iter().map(|p| p.0).collect();
                let c0 = constant.map(|c| c.0).unwrap_or_default();
                let min_arg = poles.iter().map(|p| p.arg().abs()).fold(PI, f64::min);
                if poles.iter().any(|p| p.norm() == 0.0) {
                    return Err(Error::InvalidInput("rational pole at 0".into()));
                }
                let sigma = check_sigma(min_arg.min(PI - 1e-6))?;
                Ok(ScalarFunction::new("rational", sigma, move |z| {
                    c0 + poles.iter().zip(&coeffs).map(|(p, c)| c / (z - p)).sum::<C64>()
                }))
            }
            FunctionSpec::Blaschke { sigma, zeros, rotation } => {
                let sigma = check_sigma(*sigma)?;
                if zeros.iter().any(|a| a.0.norm() >= 1.0) {
                    return Err(Error::InvalidInput("Blaschke zeros must lie in the open unit disk".into()));
                }
                let zs: Vec<C64> = zeros.iter().map(|a| a.0).collect();
                Ok(blaschke(&zs, *rotation, sigma))
            }
            FunctionSpec::Product { factors } => {
                let mut it = factors.iter();
                let first = it.next().ok_or_else(|| Error::InvalidInput("empty product".into()))?;
                it.try_fold(first.build()?, |acc, f| Ok(acc.product(&f.build()?)))
            }
        }
    }
}

/// `h_s^ρ` on `Σ_σ`, `σ < |ρ|`, with `C = 1/sqrt(1 - max(cos(|ρ| - σ), 0))`
/// and `ε = min(s, 1 - s)`.
pub fn h_s_rho_function(s: f64, rho: f64, sigma: f64) -> ScalarFunction {
    let c = 1.0 / gap_factor(rho.abs() - sigma).sqrt();
    ScalarFunction::new(format!("h_{s}^{rho}"), sigma, move |z| h_s_rho_value(z, s, rho))
        .with_decay(c, s.min(1.0 - s))
        .with_bound(c)
}

pub type BivariateFn = Arc<dyn Fn(C64, C64) -> C64 + Send + Sync>;

/// Where the singularities of a bivariate function sit; drives contour
/// placement for the joint calculus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity {
    /// Poles on `w + z = mu`.
    SumPole { mu: C64 },
    /// Bounded analytic on `Σ_a × Σ_b`.
    Separate { sigma_a: f64, sigma_b: f64 },
}

#[derive(Clone)]
pub struct BivariateFunction {
    pub name: String,
    pub singularity: Singularity,
    /// Joint certificate `|f(w,z)| <= C ρ(|w|)^ε ρ(|z|)^ε`.
    pub decay: Option<DecayCertificate>,
    eval: BivariateFn,
}

impl fmt::Debug for BivariateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BivariateFunction").field("name", &self.name).field("singularity", &self.singularity).finish()
    }
}

impl BivariateFunction {
    pub fn new(
        name: impl Into<String>,
        singularity: Singularity,
        f: impl Fn(C64, C64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        BivariateFunction { name: name.into(), singularity, decay: None, eval: Arc::new(f) }
    }

    pub fn with_decay(mut self, c: f64, eps: f64) -> Self {
        self.decay = Some(DecayCertificate { c, eps });
        self
    }

    pub fn eval(&self, w: C64, z: C64) -> C64 {
        (self.eval)(w, z)
    }

    /// `w (w + z)^{-1}`.
    pub fn w_over_sum() -> Self {
        Self::new("w/(w+z)", Singularity::SumPole { mu: C64::new(0.0, 0.0) }, |w, z| w / (w + z))
    }

    /// `μ (μ - w - z)^{-1}`.
    pub fn f_mu(mu: C64) -> Self {
        Self::new(format!("{mu}/({mu}-w-z)"), Singularity::SumPole { mu }, move |w, z| mu / (mu - w - z))
    }

    /// `φ_n(w) φ_n(z)`, jointly H∞₀.
    pub fn phi_product(n: f64, sigma: f64) -> Self {
        let c = phi_function(n, sigma).decay.map(|d| d.c).unwrap_or(0.0);
        Self::new(format!("phi_{n}(w)phi_{n}(z)"), Singularity::Separate { sigma_a: sigma, sigma_b: sigma }, move |w, z| {
            phi_n(n, w) * phi_n(n, z)
        })
        .with_decay(c * c, 1.0)
    }

    /// Contour angles `(ν_A, ν_B)` and the angular margin to the nearest
    /// singularity, for operators of spectral angles `omega_a`, `omega_b`.
    pub fn contour_angles(&self, omega_a: f64, omega_b: f64) -> Result<(f64, f64, f64)> {
        match self.singularity {
            Singularity::SumPole { mu } => {
                let gap = PI - omega_a - omega_b;
                if gap <= 0.0 {
                    return Err(Error::AngleSumExceeded(omega_a + omega_b));
                }
                let mut m = gap / 3.0;
                if mu.norm() > 0.0 {
                    let theta = mu.arg().abs();
                    let room = theta - omega_a.max(omega_b);
                    if room <= 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "mu = {mu} lies in the sector of the spectral angles"
                        )));
                    }
                    m = m.min(room / 3.0);
                }
                Ok((omega_a + m, omega_b + m, m))
            }
            Singularity::Separate { sigma_a, sigma_b } => {
                if omega_a >= sigma_a || omega_b >= sigma_b {
                    return Err(Error::NotSectorial("spectral angle exceeds the function's domain".into()));
                }
                let m = 0.5 * (sigma_a - omega_a).min(sigma_b - omega_b);
                Ok((0.5 * (omega_a + sigma_a), 0.5 * (omega_b + sigma_b), m))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum BivariateSpec {
    WOverSum,
    FMu { mu: Cplx },
    PhiProduct {
        n: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
}

impl BivariateSpec {
    pub fn build(&self) -> Result<BivariateFunction> {
        Ok(match self {
            BivariateSpec::WOverSum => BivariateFunction::w_over_sum(),
            BivariateSpec::FMu { mu } => BivariateFunction::f_mu(mu.0),
            BivariateSpec::PhiProduct { n, sigma } => {
                BivariateFunction::phi_product(*n, check_sigma(sigma.unwrap_or(DEFAULT_SIGMA))?)
            }
        })
    }
}

pub type OperatorFn = Arc<dyn Fn(C64) -> CMat + Send + Sync>;

/// A bounded analytic `F: Σ_σ -> 𝒜` with values in the commutant of `A`.
#[derive(Clone)]
pub struct OperatorFunction {
    pub name: String,
    pub domain_angle: f64,
    pub dim: usize,
    /// Bound for `sup ||F||₂` on the sector, if known.
    pub bound: Option<f64>,
    eval: OperatorFn,
}

impl fmt::Debug for OperatorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFunction").field("name", &self.name).field("domain_angle", &self.domain_angle).finish()
    }
}

impl OperatorFunction {
    pub fn new(
        name: impl Into<String>,
        domain_angle: f64,
        dim: usize,
        f: impl Fn(C64) -> CMat + Send + Sync + 'static,
    ) -> Self {
        OperatorFunction { name: name.into(), domain_angle, dim, bound: None, eval: Arc::new(f) }
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.bound = Some(b);
        self
    }

    pub fn eval(&self, z: C64) -> CMat {
        (self.eval)(z)
    }

    /// `F(ζ) = f(ζ) M`.
    pub fn scalar_times(f: &ScalarFunction, m: CMat) -> Self {
        let g = f.clone();
        let norm_m = crate::linalg::norm2(&m);
        let bound = f.sup_bound() * norm_m;
        let dim = m.nrows();
        OperatorFunction::new(format!("{}*M", f.name), f.domain_angle, dim, move |z| &m * g.eval(z)).with_bound(bound)
    }

    pub fn scalar(f: &ScalarFunction, dim: usize) -> Self {
        Self::scalar_times(f, crate::linalg::identity(dim))
    }

    pub fn sup_bound(&self) -> f64 {
        self.bound.unwrap_or_else(|| {
            1.05 * sector_sample(self.domain_angle * (1.0 - 1e-9), 40, 25)
                .into_iter()
                .map(|z| crate::linalg::norm2(&self.eval(z)))
                .fold(0.0, f64::max)
        })
    }

    /// Sampled commutant test `||F(ζ)A - AF(ζ)|| <= 1e-8 ||A|| ||F(ζ)||`.
    pub fn check_commutant(&self, a: &CMat, samples: &[C64]) -> Result<()> {
        let na = fro(a);
        for &z in samples {
            let fz = self.eval(z);
            let defect = commutator_norm(&fz, a);
            if defect > 1e-8 * na * fro(&fz).max(f64::MIN_POSITIVE) {
                return Err(Error::CommutantViolation { zeta: z, defect });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn builtins_satisfy_their_certificates() {
        let specs = vec![
            FunctionSpec::HSRho { s: 0.5, rho: 3.0 * PI / 4.0, sigma: None },
            FunctionSpec::HSRho { s: 0.2, rho: -2.0, sigma: Some(1.5) },
            FunctionSpec::ZOver1pzSq { sigma: None },
            FunctionSpec::Phi { n: 4.0, sigma: None },
        ];
        for s in specs {
            let f = s.build().unwrap();
            f.validate().unwrap();
            assert!(f.decay.is_some());
        }
    }

    #[test]
    fn phi_values() {
        assert!((phi_n(1.0, c(0.3, 2.0))).norm() < 1e-15);
        assert!((phi_n(2.0, c(1.0, 0.0)) - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn h_s_rho_example() {
        let v = h_s_rho_value(c(1.0, 0.0), 0.5, PI / 2.0);
        assert!((v - c(-0.5, -0.5)).norm() < 1e-15);
        assert!(h_s_rho_value(c(1e-12, 0.0), 0.5, 1.0).norm() < 1e-5);
    }

    #[test]
    fn blaschke_has_unit_modulus_on_the_boundary() {
        let f = blaschke(&[c(0.3, 0.4), c(-0.5, 0.1)], 0.7, 1.0);
        for r in [1e-3, 0.5, 2.0, 40.0] {
            let z = C64::from_polar(r, 1.0);
            assert!((f.eval(z).norm() - 1.0).abs() < 1e-12);
        }
        assert!(f.eval(c(1.7, 0.2)).norm() < 1.0);
    }

    #[test]
    fn wire_format_of_function_specs() {
        let f: FunctionSpec = serde_json::from_str(r#"{"fn":"h_s_rho","s":0.5,"rho":2.356}"#).unwrap();
        assert_eq!(f, FunctionSpec::HSRho { s: 0.5, rho: 2.356, sigma: None });
        let r: FunctionSpec = serde_json::from_str(r#"{"fn":"rational","poles":[[-1,0]],"coeffs":[1]}"#).unwrap();
        let g = r.build().unwrap();
        assert!((g.eval(c(1.0, 0.0)) - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bad_certificate_is_rejected() {
        let f = ScalarFunction::new("z/(1+z)^2", 2.0, |z| z / ((1.0 + z) * (1.0 + z))).with_decay(0.5, 1.0);
        assert!(f.validate().is_err());
    }
}
