use std::f64::consts::PI;

use serde::Serialize;

use crate::contour::{quadrature, ContourSpec, TailModel};
use crate::error::{Error, Result};
use crate::functions::{OperatorFunction, ScalarFunction};
use crate::linalg::{inverse, norm2, CMat, C64};
use crate::operators::{fractional_power, resolvent_scaled, spectral_angle, FractionalExponent, OperatorMatrix, RESOLVENT_TOLERANCE};

#[derive(Debug, Clone, Serialize)]
pub struct FcalcResult {
    #[serde(with = "crate::json::matrix")]
    pub value: CMat,
    /// Bound on the norm of the discarded contour tails.
    pub truncation_bound: f64,
    pub nodes: usize,
    pub contour: ContourSpec,
}

/// Tails of `f(ζ)R(ζ,A)` from `|f| <= C ρ^ε`, `||R(ζ,A)|| <= 2||A^{-1}||`
/// for `|ζ| <= 1/(2||A^{-1}||)` and `<= 2/|ζ|` for `|ζ| >= 2||A||`.
pub(crate) fn scalar_tail(a: &OperatorMatrix, c: f64, eps: f64) -> TailModel {
    let inv = a.inverse_norm2();
    TailModel {
        k0: 2.0 * c * inv / PI,
        alpha: 1.0 + eps,
        small_limit: 0.5 / inv,
        kinf: 2.0 * c / PI,
        beta: eps,
        large_limit: 2.0 * a.norm2(),
    }
}

fn resolve_spec(given: Option<&ContourSpec>, omega: f64, sigma: f64, tail: &TailModel, tol: f64) -> Result<ContourSpec> {
    match given {
        Some(c) => {
            c.check_admissible(omega, sigma)?;
            Ok(c.clone())
        }
        None => ContourSpec::auto(omega, sigma, tail, tol),
    }
}

/// `f(A) = (-1/2πi) ∫_{Γ_ν} f(ζ) R(ζ,A) dζ` for `f` in H∞₀. Without an
/// explicit contour, `ν` is the midpoint between the spectral angle and the
/// domain angle and the window is sized from the decay certificate.
pub fn contour_fcalc(a: &OperatorMatrix, f: &ScalarFunction, contour: Option<&ContourSpec>) -> Result<FcalcResult> {
    let decay = f.decay.ok_or_else(|| Error::MissingDecay(f.name.clone()))?;
    let omega = spectral_angle(a)?;
    let tail = scalar_tail(a, decay.c, decay.eps);
    let spec = resolve_spec(contour, omega, f.domain_angle, &tail, 1e-12 * decay.c.max(1.0))?;
    let nodes = spec.nodes();
    let d = a.dim();
    let threshold = RESOLVENT_TOLERANCE * a.norm2();
    let value = quadrature(&nodes, d, d, |n| {
        let r = resolvent_scaled(a.matrix(), n.zeta, threshold)?;
        Ok(r * (n.weight * f.eval(n.zeta)))
    })?;
    Ok(FcalcResult {
        value,
        truncation_bound: tail.truncation_bound(spec.r_min, spec.r_max),
        nodes: nodes.len(),
        contour: spec,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub n: u32,
    /// `||(φ_n f)(A)||₂`.
    pub sup_norm: f64,
    /// Distance between this candidate and the previous one.
    pub change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizedResult {
    #[serde(with = "crate::json::matrix")]
    pub value: CMat,
    pub trace: Vec<TracePoint>,
    pub converged_at: u32,
}

/// Bounded `f` through the H∞₀ functions `φ_n f`, `n = 2, 4, ..., n_max`.
///
/// Since `(φ_n f)(A) = f(A) V_n` with `V_n = φ_n(A)` invertible, each
/// candidate is `(φ_n f)(A) V_n^{-1}`; convergence is declared when two
/// successive candidates agree to `1e-8` (relative). The trace records
/// `||(φ_n f)(A)||`, whose boundedness in `n` is the membership criterion;
/// it must stay below `ceiling`.
pub fn regularized_fcalc(
    a: &OperatorMatrix,
    f: &ScalarFunction,
    contour: Option<&ContourSpec>,
    n_max: u32,
    ceiling: f64,
) -> Result<RegularizedResult> {
    let mut trace = Vec::new();
    let mut prev: Option<CMat> = None;
    let mut n = 2u32;
    while n <= n_max.max(4) {
        let g = f.regularize(n as f64, 1);
        let l = contour_fcalc(a, &g, contour)?.value;
        let sup_norm = norm2(&l);
        if !(sup_norm <= ceiling) {
            return Err(Error::NoConvergence(format!(
                "||(phi_{n} f)(A)|| = {sup_norm:e} exceeds the ceiling {ceiling:e}"
            )));
        }
        let vn = crate::operators::approximate_identity(a, n as f64)?;
        let vinv = inverse(&vn).ok_or_else(|| Error::NoConvergence(format!("V_{n} is singular")))?;
        let cand = l * vinv;
        let change = prev.as_ref().map(|p| norm2(&(&cand - p))).unwrap_or(f64::INFINITY);
        trace.push(TracePoint { n, sup_norm, change });
        if change < 1e-8 * norm2(&cand).max(1.0) {
            return Ok(RegularizedResult { value: cand, trace, converged_at: n });
        }
        prev = Some(cand);
        n *= 2;
    }
    Err(Error::NoConvergence(format!("no agreement to 1e-8 up to n = {n_max}")))
}

/// `F(A) = (-1/2πi) ∫ ζ^{-s} F(ζ) A^s R(ζ,A) dζ`, valid for bounded `F`
/// with values commuting with `A`.
pub fn operator_fcalc(
    a: &OperatorMatrix,
    f: &OperatorFunction,
    s: FractionalExponent,
    contour: Option<&ContourSpec>,
) -> Result<FcalcResult> {
    let prepared = AltdefNodes::new(a, f.domain_angle, f.sup_bound(), s, contour)?;
    let probe: Vec<C64> = prepared.probe_points();
    f.check_commutant(a.matrix(), &probe)?;
    let d = a.dim();
    let value = quadrature(&prepared.nodes, d, d, |n| Ok(f.eval(n.zeta) * &prepared.kernel(n)?))?;
    Ok(FcalcResult {
        value,
        truncation_bound: prepared.truncation_bound,
        nodes: prepared.nodes.len(),
        contour: prepared.spec,
    })
}

/// Contour data for the `ζ^{-s} A^s R(ζ,A)` representation.
pub(crate) struct AltdefNodes<'a> {
    a: &'a OperatorMatrix,
    pub nodes: Vec<crate::contour::Node>,
    pub spec: ContourSpec,
    power: CMat,
    s: f64,
    threshold: f64,
    pub truncation_bound: f64,
}

impl<'a> AltdefNodes<'a> {
    pub fn new(
        a: &'a OperatorMatrix,
        sigma: f64,
        bound: f64,
        s: FractionalExponent,
        contour: Option<&ContourSpec>,
    ) -> Result<Self> {
        let omega = spectral_angle(a)?;
        let power = fractional_power(a, s)?;
        let np = norm2(&power);
        let inv = a.inverse_norm2();
        let m = bound.max(f64::MIN_POSITIVE);
        let tail = TailModel {
            k0: 2.0 * m * np * inv / PI,
            alpha: 1.0 - s.s,
            small_limit: 0.5 / inv,
            kinf: 2.0 * m * np / PI,
            beta: s.s,
            large_limit: 2.0 * a.norm2(),
        };
        let spec = resolve_spec(contour, omega, sigma, &tail, 1e-11 * m.max(1.0))?;
        Ok(AltdefNodes {
            a,
            nodes: spec.nodes(),
            truncation_bound: tail.truncation_bound(spec.r_min, spec.r_max),
            spec,
            power,
            s: s.s,
            threshold: RESOLVENT_TOLERANCE * a.norm2(),
        })
    }

    /// `w ζ^{-s} A^s R(ζ,A)` at a node.
    pub fn kernel(&self, n: &crate::contour::Node) -> Result<CMat> {
        let r = resolvent_scaled(self.a.matrix(), n.zeta, self.threshold)?;
        Ok(&self.power * r * (n.weight * n.zeta.powf(-self.s)))
    }

    /// A few contour points spread over the window, for commutant checks.
    pub fn probe_points(&self) -> Vec<C64> {
        let step = (self.nodes.len() / 8).max(1);
        self.nodes.iter().step_by(step).map(|n| n.zeta).collect()
    }
}
