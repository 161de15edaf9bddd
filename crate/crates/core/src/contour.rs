//! The contour Γ_ν = {|t| e^{i sgn(t) ν}} and its trapezoidal discretization
//! in the log-radius.
//!
//! The contour runs in along the lower ray and out along the upper ray, so
//! for a scalar `a` inside the sector `(-1/2πi) ∫ f(ζ)/(ζ - a) dζ = f(a)`.
//! Node weights already contain the `-1/2πi` factor and `dζ = ζ du`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, CMat, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub angle: f64,
    pub nodes_per_decade: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Fault-injection hook: node `j` gets weight `w_j (1 + jitter u_j)` with
    /// `u_j ∈ [-1, 1)` a fixed hash of `j`. An alternating `±1` would cancel
    /// on smooth integrands and go unnoticed.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub weight_jitter: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub zeta: C64,
    pub weight: C64,
    pub r: f64,
    /// `+1` for the upper ray, `-1` for the lower one.
    pub ray: i8,
}

/// Power-law envelope of the integrand norm near `0` and `∞`:
/// `||g(r e^{±iν})|| r <= k0 r^alpha` for `r <= small_limit` and
/// `<= kinf r^-beta` for `r >= large_limit` (both rays together, per unit
/// of `dr/r`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub k0: f64,
    pub alpha: f64,
    pub small_limit: f64,
    pub kinf: f64,
    pub beta: f64,
    pub large_limit: f64,
}

impl TailModel {
    /// Smallest window whose two truncated tails each stay below `tol / 2`.
    pub fn window(&self, tol: f64) -> (f64, f64) {
        let r_min = self.small_limit.min((tol * self.alpha / (2.0 * self.k0)).powf(1.0 / self.alpha));
        let r_max = self.large_limit.max((2.0 * self.kinf / (tol * self.beta)).powf(1.0 / self.beta));
        (r_min, r_max)
    }

    /// Bound on the integral over `(0, r_min) ∪ (r_max, ∞)`.
    pub fn truncation_bound(&self, r_min: f64, r_max: f64) -> f64 {
        let small = if r_min <= self.small_limit {
            self.k0 * r_min.powf(self.alpha) / self.alpha
        } else {
            f64::INFINITY
        };
        let large = if r_max >= self.large_limit {
            self.kinf * r_max.powf(-self.beta) / self.beta
        } else {
            f64::INFINITY
        };
        small + large
    }
}

/// Nodes per decade for a trapezoid rule whose integrand is analytic in a
/// strip of half-width `margin` (radians) around the ray; the discretization
/// error decays like `exp(-2π margin npd / ln 10)`.
pub fn nodes_per_decade_for(margin: f64) -> usize {
    ((12.65 / margin.max(1e-3)).ceil() as usize).clamp(40, 400)
}

impl ContourSpec {
    pub fn new(angle: f64, nodes_per_decade: usize, r_min: f64, r_max: f64) -> Result<Self> {
        let spec = ContourSpec { angle, nodes_per_decade, r_min, r_max, weight_jitter: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.angle > 0.0 && self.angle < PI) {
            return Err(Error::InvalidInput(format!("contour angle {} outside (0, pi)", self.angle)));
        }
        if self.nodes_per_decade == 0 {
            return Err(Error::InvalidInput("nodes_per_decade must be positive".into()));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "contour window [{}, {}] is not a positive interval",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    /// Checks `omega < angle < sigma` for operator angle `omega` and function
    /// domain angle `sigma`.
    pub fn check_admissible(&self, omega: f64, sigma: f64) -> Result<()> {
        self.validate()?;
        if self.angle <= omega {
            return Err(Error::NotSectorial(format!(
                "contour angle {} does not exceed the spectral angle {omega}",
                self.angle
            )));
        }
        if self.angle >= sigma {
            return Err(Error::InvalidInput(format!(
                "contour angle {} is not inside the function's domain angle {sigma}",
                self.angle
            )));
        }
        Ok(())
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.weight_jitter = jitter;
        self
    }

    pub fn intervals(&self) -> usize {
        let decades = (self.r_max / self.r_min).log10();
        ((decades * self.nodes_per_decade as f64).ceil() as usize).max(2)
    }

    pub fn node_count(&self) -> usize {
        2 * (self.intervals() + 1)
    }

    /// Lower ray first (outermost node first), then the upper ray.
    pub fn nodes(&self) -> Vec<Node> {
        let n = self.intervals();
        let (u0, u1) = (self.r_min.ln(), self.r_max.ln());
        let h = (u1 - u0) / n as f64;
        let up = C64::from_polar(1.0, self.angle);
        let down = C64::from_polar(1.0, -self.angle);
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        let mut out = Vec::with_capacity(2 * (n + 1));
        for (ray, dir) in [(-1i8, down), (1i8, up)] {
            for j in 0..=n {
                let u = if ray < 0 { u1 - j as f64 * h } else { u0 + j as f64 * h };
                let r = u.exp();
                let end = if j == 0 || j == n { 0.5 } else { 1.0 };
                let zeta = dir * r;
                let sign = if ray > 0 { -1.0 } else { 1.0 };
                let weight = zeta * (sign * end * h) / two_pi_i;
                out.push(Node { zeta, weight, r, ray });
            }
        }
        if self.weight_jitter != 0.0 {
            for (j, node) in out.iter_mut().enumerate() {
                node.weight *= 1.0 + self.weight_jitter * unit_hash(j as u64);
            }
        }
        out
    }

    /// Spec with the angle strictly between `omega` and `sigma` (midpoint
    /// unless overridden), nodes per decade matched to the smaller angular
    /// margin, and the window from `tail` at absolute tolerance `tol`.
    pub fn auto(omega: f64, sigma: f64, tail: &TailModel, tol: f64) -> Result<Self> {
        if !(omega < sigma) {
            return Err(Error::NotSectorial(format!(
                "spectral angle {omega} is not below the function's domain angle {sigma}"
            )));
        }
        let angle = 0.5 * (omega + sigma);
        let (r_min, r_max) = tail.window(tol);
        Self::new(angle, nodes_per_decade_for(0.5 * (sigma - omega)), r_min, r_max)
    }
}

/// splitmix64 of `j`, mapped to `[-1, 1)`.
fn unit_hash(j: u64) -> f64 {
    let mut z = j.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// `Σ_j terms(node_j)` with nodes evaluated in parallel and accumulated by
/// pairwise summation in node order, so the result does not depend on
/// scheduling.
pub fn quadrature<F>(nodes: &[Node], rows: usize, cols: usize, term: F) -> Result<CMat>
where
    F: Fn(&Node) -> Result<CMat> + Sync,
{
    let terms: Vec<CMat> = nodes.par_iter().map(|n| term(n)).collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&terms, rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_symmetric_across_rays() {
        let c = ContourSpec::new(1.0, 8, 1e-2, 1e2).unwrap();
        let nodes = c.nodes();
        let half = nodes.len() / 2;
        for j in 0..half {
            let lo = nodes[j];
            let hi = nodes[2 * half - 1 - j];
            assert!((lo.zeta - hi.zeta.conj()).norm() < 1e-14 * lo.r);
            assert!((lo.weight - hi.weight.conj()).norm() < 1e-14 * lo.r);
        }
    }

    #[test]
    fn cauchy_formula_for_a_scalar() {
        // (-1/2πi) ∫ (ζ/(1+ζ)²) / (ζ - a) dζ = a/(1+a)².
        let c = ContourSpec::new(PI / 2.0, 60, 1e-14, 1e14).unwrap();
        let a = C64::new(2.0, 0.5);
        let sum: C64 = c
            .nodes()
            .iter()
            .map(|n| n.weight * n.zeta / ((1.0 + n.zeta) * (1.0 + n.zeta)) / (n.zeta - a))
            .sum();
        let exact = a / ((1.0 + a) * (1.0 + a));
        assert!((sum - exact).norm() < 1e-12, "{sum} vs {exact}");
    }

    #[test]
    fn window_meets_tolerance() {
        let tail = TailModel { k0: 3.0, alpha: 2.0, small_limit: 0.5, kinf: 3.0, beta: 1.0, large_limit: 4.0 };
        let (lo, hi) = tail.window(1e-10);
        assert!(tail.truncation_bound(lo, hi) <= 1.0001e-10);
    }
}
