use serde::{Deserialize, Serialize};

use super::estimators::{bounds_ordered, estimate_kind};
use super::{BoundKind, OperatorFamily, SignConfig};
use crate::error::{Error, Result};
use crate::estimate::BoundEstimate;
use crate::functions::OperatorFunction;
use crate::linalg::{identity, CMat, C64};
use crate::norms::NormSpec;
use crate::operators::{resolvent, spectral_angle, OperatorMatrix};
use crate::search::{for_each_sign_pattern, random_sign, stream, SearchConfig};

/// Discretization and search budget for families indexed by a region of the
/// plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AngleCurveConfig {
    pub kind: BoundKind,
    pub radii_per_decade: usize,
    pub angles: usize,
    /// Decades sampled beyond the spectral radii on each side.
    pub margin_decades: f64,
    /// Selection length for the family estimators.
    pub n: usize,
    /// Constants above this are treated as unbounded.
    pub ceiling: f64,
    /// Relative change allowed under one grid refinement.
    pub refine_tolerance: f64,
    pub sign: SignConfig,
    pub search: SearchConfig,
}

impl Default for AngleCurveConfig {
    fn default() -> Self {
        AngleCurveConfig {
            kind: BoundKind::R,
            radii_per_decade: 16,
            angles: 8,
            margin_decades: 2.0,
            n: 2,
            ceiling: 1e3,
            refine_tolerance: 0.05,
            sign: SignConfig::default(),
            search: SearchConfig { starts: 8, steps: 40, seed: 42, max_selections: 16 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglePoint {
    pub sigma: f64,
    pub estimate: BoundEstimate,
    /// Value on the doubled grid, computed only for ω candidates.
    #[serde(default)]
    pub refined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleCurve {
    pub kind: BoundKind,
    pub points: Vec<AnglePoint>,
    /// Smallest grid angle whose constant is below the ceiling and stable
    /// under refinement.
    pub omega: Option<f64>,
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10().max(0.0);
    let m = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=m).map(|i| lo * 10f64.powf(decades * i as f64 / m as f64)).collect()
}

/// `{λR(λ,A) : |arg λ| ≥ σ}` on a log-radial × angular grid; `level`
/// doubles both resolutions.
fn resolvent_family(a: &OperatorMatrix, sigma: f64, cfg: &AngleCurveConfig, level: u32) -> Result<Vec<CMat>> {
    let scale = 1usize << level;
    let lo = 10f64.powf(-cfg.margin_decades) / a.inverse_norm2();
    let hi = 10f64.powf(cfg.margin_decades) * a.norm2();
    let radii = log_grid(lo, hi, cfg.radii_per_decade * scale);
    let na = (cfg.angles * scale).max(2);
    let mut thetas: Vec<f64> = (0..na).map(|j| sigma + (std::f64::consts::PI - sigma) * j as f64 / (na - 1) as f64).collect();
    let negated: Vec<f64> = thetas.iter().filter(|t| **t < std::f64::consts::PI).map(|t| -t).collect();
    thetas.extend(negated);
    let mut out = Vec::with_capacity(radii.len() * thetas.len());
    for &r in &radii {
        for &th in &thetas {
            let lambda = C64::from_polar(r, th);
            out.push(resolvent(a, lambda)? * lambda);
        }
    }
    Ok(out)
}

fn check_angles(a: &OperatorMatrix, angles: &[f64]) -> Result<f64> {
    let omega = spectral_angle(a)?;
    if let Some(bad) = angles.iter().find(|&&s| s <= omega || s >= std::f64::consts::PI) {
        return Err(Error::InvalidInput(format!("angle {bad} outside ({omega}, π)")));
    }
    Ok(omega)
}

fn omega_surrogate(
    a: &OperatorMatrix,
    norm: &NormSpec,
    cfg: &AngleCurveConfig,
    kind: BoundKind,
    points: &mut [AnglePoint],
) -> Result<Option<f64>> {
    for p in points.iter_mut() {
        if !(p.estimate.value <= cfg.ceiling) {
            continue;
        }
        let fam = OperatorFamily::from_matrices(resolvent_family(a, p.sigma, cfg, 1)?, norm.clone())?;
        let refined = estimate_kind(kind, &fam, cfg.n, &cfg.sign, &cfg.search)?.value;
        p.refined = Some(refined);
        if refined <= cfg.ceiling && (refined - p.estimate.value).abs() <= cfg.refine_tolerance * p.estimate.value {
            return Ok(Some(p.sigma));
        }
    }
    Ok(None)
}

/// Curve `σ ↦` bound of `{λR(λ,A) : |arg λ| ≥ σ}` for the configured kind.
pub fn r_sectorial_angle(a: &OperatorMatrix, norm: &NormSpec, angles: &[f64], cfg: &AngleCurveConfig) -> Result<AngleCurve> {
    check_angles(a, angles)?;
    let mut sorted = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(sorted.len());
    for &sigma in &sorted {
        let fam = OperatorFamily::from_matrices(resolvent_family(a, sigma, cfg, 0)?, norm.clone())?;
        let estimate = estimate_kind(cfg.kind, &fam, cfg.n, &cfg.sign, &cfg.search)?;
        points.push(AnglePoint { sigma, estimate, refined: None });
    }
    let omega = omega_surrogate(a, norm, cfg, cfg.kind, &mut points)?;
    Ok(AngleCurve { kind: cfg.kind, points, omega })
}

/// The U, WR and R curves on one grid, each family searched with the
/// cross-seeded estimators so the pointwise ordering is checkable.
pub fn r_sectorial_curves(
    a: &OperatorMatrix,
    norm: &NormSpec,
    angles: &[f64],
    cfg: &AngleCurveConfig,
) -> Result<[AngleCurve; 3]> {
    check_angles(a, angles)?;
    let mut sorted = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut curves = [BoundKind::U, BoundKind::Wr, BoundKind::R].map(|kind| AngleCurve { kind, points: Vec::new(), omega: None });
    for &sigma in &sorted {
        let fam = OperatorFamily::from_matrices(resolvent_family(a, sigma, cfg, 0)?, norm.clone())?;
        let b = bounds_ordered(&fam, cfg.n, &cfg.sign, &cfg.search)?;
        for (curve, estimate) in curves.iter_mut().zip([b.u, b.wr, b.r]) {
            curve.points.push(AnglePoint { sigma, estimate, refined: None });
        }
    }
    for curve in curves.iter_mut() {
        curve.omega = omega_surrogate(a, norm, cfg, curve.kind, &mut curve.points)?;
    }
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayExtension {
    /// `sup_t` over both rays of the bound of `{F(a^k t e^{±iν})}_k`.
    pub ray: BoundEstimate,
    pub ray_t: f64,
    pub ray_sign: i8,
    /// Bound of `{F(z)}` over a sample of the closed sector of angle `σ₀`.
    pub sector: BoundEstimate,
    /// `sector / ray`; the geometry factor observed at this scale.
    pub ratio: f64,
}

/// Grid of U-bounds on the rays `arg z = ±ν` against a direct U-bound on
/// the smaller sector of angle `σ₀`.
#[allow(clippy::too_many_arguments)]
pub fn ray_ubound_extension(
    f: &OperatorFunction,
    nu: f64,
    a: f64,
    sigma0: f64,
    t_grid: &[f64],
    k_range: i32,
    norm: &NormSpec,
    cfg: &AngleCurveConfig,
) -> Result<RayExtension> {
    if !(0.0 < sigma0 && sigma0 < nu && nu < f.domain_angle) {
        return Err(Error::InvalidInput(format!(
            "need 0 < σ₀ = {sigma0} < ν = {nu} < {} (domain of F)",
            f.domain_angle
        )));
    }
    if !(a > 1.0) || t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) || k_range < 0 {
        return Err(Error::InvalidInput("need a > 1, positive t values and k_range ≥ 0".into()));
    }
    let mut best: Option<(BoundEstimate, f64, i8)> = None;
    for &t in t_grid {
        for sgn in [1i8, -1] {
            let members: Vec<CMat> =
                (-k_range..=k_range).map(|k| f.eval(C64::from_polar(a.powi(k) * t, sgn as f64 * nu))).collect();
            let fam = OperatorFamily::from_matrices(members, norm.clone())?;
            let e = estimate_kind(BoundKind::U, &fam, cfg.n, &cfg.sign, &cfg.search)?;
            if best.as_ref().is_none_or(|b| e.value > b.0.value) {
                best = Some((e, t, sgn));
            }
        }
    }
    let (ray, ray_t, ray_sign) = best.expect("nonempty t grid");
    let t_lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min) * a.powi(-k_range);
    let t_hi = t_grid.iter().copied().fold(0.0, f64::max) * a.powi(k_range);
    let na = cfg.angles.max(2) + 1;
    let mut members = Vec::new();
    for r in log_grid(t_lo, t_hi, cfg.radii_per_decade) {
        for j in 0..na {
            let th = -sigma0 + 2.0 * sigma0 * j as f64 / (na - 1) as f64;
            members.push(f.eval(C64::from_polar(r, th)));
        }
    }
    let fam = OperatorFamily::from_matrices(members, norm.clone())?;
    let sector = estimate_kind(BoundKind::U, &fam, cfg.n, &cfg.sign, &cfg.search)?;
    let ratio = if ray.value > 0.0 {
        sector.value / ray.value
    } else if sector.value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RayExtension { ray, ray_t, ray_sign, sector, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncSeriesResult {
    /// R-bound of the partial sums `{Σ_{k≤n} U_k V_k : n ≤ K}`.
    pub r: BoundEstimate,
    /// `sup_n sup_ε ||Σ_{k≤n} ε_k U_k||`, likewise for V.
    pub m_u: f64,
    pub m_v: f64,
    /// `r / (m_u m_v)`: the constant of the estimate at this norm.
    pub ratio: f64,
}

/// `sup_{n ≤ K} sup_ε ||Σ_{k≤n} ε_k T_k||`; exhaustive up to `n_max` terms.
pub fn unconditional_constant(ops: &[CMat], norm: &NormSpec, sign: &SignConfig) -> f64 {
    let d = ops[0].nrows();
    let mut best = 0.0f64;
    for n in 1..=ops.len() {
        if sign.exhaustive_for(n) {
            let mut sum = ops[..n].iter().fold(CMat::zeros(d, d), |s, t| s + t);
            for_each_sign_pattern(n - 1, |signs, flipped| {
                if let Some(k) = flipped {
                    sum += &ops[k + 1] * C64::new(2.0 * signs[k], 0.0);
                }
                best = best.max(norm.operator_norm(&sum));
            });
        } else {
            let mut rng = stream(sign.seed, 0x0c5 + n as u64);
            for _ in 0..sign.samples {
                let sum = ops[..n].iter().fold(CMat::zeros(d, d), |s, t| s + t * C64::new(random_sign(&mut rng), 0.0));
                best = best.max(norm.operator_norm(&sum));
            }
        }
    }
    best
}

/// R-bound of the partial sums of `Σ U_k V_k` over the first `k_terms`
/// terms, against the unconditional constants of both sequences.
pub fn uncseries_partial_sums(
    u: &[CMat],
    v: &[CMat],
    norm: &NormSpec,
    k_terms: usize,
    sign: &SignConfig,
    search: &SearchConfig,
) -> Result<UncSeriesResult> {
    if u.len() != v.len() || k_terms == 0 || k_terms > u.len() {
        return Err(Error::InvalidInput(format!(
            "need equal-length sequences with 1 ≤ K ≤ {}, got {} and {} with K = {k_terms}",
            u.len().min(v.len()),
            u.len(),
            v.len()
        )));
    }
    let d = u[0].nrows();
    if u.iter().chain(v).any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::DimensionMismatch("sequences must be square of one dimension".into()));
    }
    let (u, v) = (&u[..k_terms], &v[..k_terms]);
    let mut partial = Vec::with_capacity(k_terms);
    let mut acc = CMat::zeros(d, d);
    for (uk, vk) in u.iter().zip(v) {
        acc += uk * vk;
        partial.push(acc.clone());
    }
    let fam = OperatorFamily::from_matrices(partial, norm.clone())?;
    let r = estimate_kind(BoundKind::R, &fam, k_terms.min(sign.n_max), sign, search)?;
    let m_u = unconditional_constant(u, norm, sign);
    let m_v = unconditional_constant(v, norm, sign);
    let ratio = if m_u * m_v > 0.0 { r.value / (m_u * m_v) } else { 0.0 };
    Ok(UncSeriesResult { r, m_u, m_v, ratio })
}

/// `F(z) = f(z) I` as an operator function, for ray experiments.
pub fn scalar_operator_function(f: &crate::functions::ScalarFunction, d: usize) -> OperatorFunction {
    OperatorFunction::scalar_times(f, identity(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::phi_function;
    use crate::linalg::{c, from_real_rows, real_diag};
    use std::f64::consts::PI;

    fn fast() -> AngleCurveConfig {
        AngleCurveConfig {
            radii_per_decade: 4,
            angles: 4,
            margin_decades: 1.0,
            search: SearchConfig { starts: 4, steps: 30, seed: 1, max_selections: 8 },
            ..Default::default()
        }
    }

    #[test]
    fn scalar_curve_is_sup_modulus() {
        let a = OperatorMatrix::new(real_diag(&[2.0])).unwrap();
        let cfg = fast();
        let curve = r_sectorial_angle(&a, &NormSpec::l2(), &[PI / 2.0], &cfg).unwrap();
        let fam = resolvent_family(&a, PI / 2.0, &cfg, 0).unwrap();
        let sup = fam.iter().map(|m| m[(0, 0)].norm()).fold(0.0, f64::max);
        assert!((curve.points[0].estimate.value - sup).abs() < 1e-9 * sup);
    }

    #[test]
    fn projections_give_unit_ratio() {
        let e = |k: usize| {
            let mut m = CMat::zeros(3, 3);
            m[(k, k)] = c(1.0, 0.0);
            m
        };
        let u: Vec<CMat> = (0..3).map(e).collect();
        let res = uncseries_partial_sums(&u, &u, &NormSpec::l2(), 3, &SignConfig::default(), &fast().search).unwrap();
        assert!((res.r.value - 1.0).abs() < 1e-9);
        assert!((res.m_u - 1.0).abs() < 1e-9 && (res.ratio - 1.0).abs() < 1e-9);
        let one = uncseries_partial_sums(&u, &u, &NormSpec::l2(), 1, &SignConfig::default(), &fast().search).unwrap();
        assert!((one.r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_term_is_operator_norm() {
        let u = vec![from_real_rows(2, &[1.0, 2.0, 0.0, 1.0])];
        let v = vec![from_real_rows(2, &[0.5, 0.0, 1.0, 1.0])];
        let res = uncseries_partial_sums(&u, &v, &NormSpec::lp(1.0), 1, &SignConfig::default(), &fast().search).unwrap();
        let exact = NormSpec::lp(1.0).operator_norm(&(&u[0] * &v[0]));
        assert!((res.r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn constant_and_zero_functions_on_rays() {
        let t = from_real_rows(2, &[1.0, 0.5, 0.0, 2.0]);
        let tc = t.clone();
        let f = OperatorFunction::new("T", PI, 2, move |_| tc.clone());
        let r = ray_ubound_extension(&f, PI / 2.0, 2.0, PI / 4.0, &[1.0], 3, &NormSpec::lp(1.0), &fast()).unwrap();
        let exact = NormSpec::lp(1.0).operator_norm(&t);
        assert!((r.ray.value - exact).abs() < 1e-9 * exact && (r.sector.value - exact).abs() < 1e-9 * exact);
        let z = OperatorFunction::new("0", PI, 2, |_| CMat::zeros(2, 2));
        let r = ray_ubound_extension(&z, PI / 2.0, 2.0, PI / 4.0, &[1.0], 3, &NormSpec::l2(), &fast()).unwrap();
        assert_eq!((r.ray.value, r.sector.value, r.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn phi_two_sector_controlled_by_rays() {
        let f = scalar_operator_function(&phi_function(2.0, 0.9 * PI), 2);
        let r = ray_ubound_extension(&f, PI / 2.0, 2.0, PI / 4.0, &[1.0, 1.5], 4, &NormSpec::l2(), &fast()).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0 && r.ratio <= 1.0 + 1e-9, "{}", r.ratio);
    }
}
