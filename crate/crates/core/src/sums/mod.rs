//! Sums of commuting sectorial operators, maximal regularity of the
//! discretized Cauchy problem, and the absolute-integral estimate on ℓ1.

mod gt;
mod maxreg;

use serde::{Deserialize, Serialize};

use crate::calculus::{check_commuting, joint_fcalc, JointOptions, JointResult};
use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::functions::BivariateFunction;
use crate::json::vector_json;
use crate::linalg::{commutator_norm, inverse, min_singular, rel_err, CMat, C64};
use crate::norms::NormSpec;
use crate::operators::{resolvent, spectral_angle, OperatorMatrix, Sector};
use crate::opnorm::{duality_ascent, LinearOp};
use crate::rbound::{r_bound, OperatorFamily, SignConfig};
use crate::search::SearchConfig;

pub use gt::{gt_absolute_integral, gt_ratio_interval, GtInterval, GtResult};
pub use maxreg::{
    maximal_regularity_constant, s_delta_norm, s_delta_sweep, semigroup, CauchyProblem, RegularityLevel, RegularityReport,
};

/// Commuting sectorial `A`, `B` of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutingPair {
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
    /// `||AB - BA||_F` at construction.
    pub commutator: f64,
}

impl CommutingPair {
    pub fn new(a: OperatorMatrix, b: OperatorMatrix) -> Result<Self> {
        check_commuting(&a, &b)?;
        spectral_angle(&a)?;
        spectral_angle(&b)?;
        let commutator = commutator_norm(a.matrix(), b.matrix());
        Ok(CommutingPair { a, b, commutator })
    }

    pub fn angle_sum(&self) -> Result<f64> {
        Ok(spectral_angle(&self.a)? + spectral_angle(&self.b)?)
    }

    pub fn sum(&self) -> CMat {
        self.a.matrix() + self.b.matrix()
    }
}

/// `f(A,B)` for `f(w,z) = w/(w+z)`, so that `f(A,B)(A+B) = A`.
pub fn inverse_sum_operator(pair: &CommutingPair, opts: &JointOptions) -> Result<JointResult> {
    let s = pair.angle_sum()?;
    if s >= std::f64::consts::PI {
        return Err(Error::AngleSumExceeded(s));
    }
    joint_fcalc(&pair.a, &pair.b, &BivariateFunction::w_over_sum(), opts)
}

struct Composed {
    m: CMat,
}

impl LinearOp for Composed {
    fn dim_in(&self) -> usize {
        self.m.ncols()
    }
    fn dim_out(&self) -> usize {
        self.m.nrows()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.m.apply(x)
    }
    fn apply_transpose(&self, y: &[C64]) -> Vec<C64> {
        self.m.apply_transpose(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosednessEstimate {
    /// `sup (||Ax|| + ||Bx||) / ||(A+B)x||`.
    pub estimate: BoundEstimate,
    /// `||f(A,B)||` in the same norm.
    pub inverse_sum_norm: f64,
    /// `1 + 2 ||f(A,B)||`, which dominates the constant.
    pub calculus_bound: f64,
}

fn check_sum_invertible(pair: &CommutingPair) -> Result<CMat> {
    let s = pair.sum();
    let smin = min_singular(&s);
    if smin <= 1e-12 * (pair.a.norm2() + pair.b.norm2()) {
        return Err(Error::SumSingular(smin));
    }
    inverse(&s).ok_or(Error::SumSingular(smin))
}

/// Best constant in `||Ax|| + ||Bx|| <= C ||Ax + Bx||`, maximized over
/// `y = (A+B)x` by duality ascent on the pair `A(A+B)^{-1}`, `B(A+B)^{-1}`.
pub fn sum_closedness_constant(
    pair: &CommutingPair,
    norm: &NormSpec,
    search: &SearchConfig,
    opts: &JointOptions,
) -> Result<ClosednessEstimate> {
    norm.validate()?;
    norm.check_dim(pair.a.dim())?;
    let sinv = check_sum_invertible(pair)?;
    let pa = Composed { m: pair.a.matrix() * &sinv };
    let pb = Composed { m: pair.b.matrix() * &sinv };
    // Eigenvectors of A mapped through A+B attain the diagonal oracle.
    let s = pair.sum();
    let ev = &pair.a.eigen().vectors;
    let hints: Vec<Vec<C64>> = (0..ev.ncols()).map(|j| s.apply(&ev.column(j).iter().copied().collect::<Vec<_>>())).collect();
    let res = duality_ascent(&[&pa, &pb], norm, norm, &hints, search.starts, search.seed);
    let x = sinv.apply(&res.x);
    let mut method = MethodInfo::new("duality_ascent");
    method.seed = Some(search.seed);
    method.starts = hints.len() + search.starts;
    method.evaluations = res.iterations;
    let f = inverse_sum_operator(pair, opts)?;
    let fnorm = norm.operator_norm(&f.value);
    let calculus_bound = 1.0 + 2.0 * fnorm;
    let method = method.note(format!("calculus bound 1 + 2||f(A,B)|| = {calculus_bound}"));
    Ok(ClosednessEstimate {
        estimate: BoundEstimate::new(res.value, Witness::Vector { x: vector_json(&x) }, method, true),
        inverse_sum_norm: fnorm,
        calculus_bound,
    })
}

/// Ratio `(||Ax|| + ||Bx||) / ||(A+B)x||` at one vector.
pub fn closedness_ratio(pair: &CommutingPair, norm: &NormSpec, x: &[C64]) -> f64 {
    let ax = pair.a.matrix().apply(x);
    let bx = pair.b.matrix().apply(x);
    let sx: Vec<C64> = ax.iter().zip(&bx).map(|(p, q)| p + q).collect();
    (norm.norm(&ax) + norm.norm(&bx)) / norm.norm(&sx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SumSampleConfig {
    pub radii_per_decade: usize,
    pub angles: usize,
    pub margin_decades: f64,
    /// Number of sampled `μ` cross-checked against the joint calculus.
    pub joint_checks: usize,
    pub n: usize,
    pub sign: SignConfig,
    pub search: SearchConfig,
}

impl Default for SumSampleConfig {
    fn default() -> Self {
        SumSampleConfig {
            radii_per_decade: 4,
            angles: 4,
            margin_decades: 1.0,
            joint_checks: 4,
            n: 2,
            sign: SignConfig::default(),
            search: SearchConfig { starts: 8, steps: 40, seed: 42, max_selections: 16 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumSectoriality {
    pub estimate: BoundEstimate,
    pub samples: usize,
    /// Largest relative difference between `μR(μ,A+B)` and the joint
    /// calculus of `μ/(μ-w-z)` over the checked samples.
    pub max_joint_error: f64,
    pub checked: Vec<crate::json::Cplx>,
}

/// R-bound of `{μR(μ,A+B) : |arg μ| ≥ ρ}` on a sample, with a subset of the
/// samples recomputed through the joint calculus of `f_μ`.
pub fn sum_r_sectoriality(
    pair: &CommutingPair,
    rho: Sector,
    norm: &NormSpec,
    cfg: &SumSampleConfig,
) -> Result<SumSectoriality> {
    let (oa, ob) = (spectral_angle(&pair.a)?, spectral_angle(&pair.b)?);
    if rho.angle <= oa.max(ob) || rho.angle >= std::f64::consts::PI {
        return Err(Error::InvalidInput(format!("ρ = {} must lie in (max spectral angle = {}, π)", rho.angle, oa.max(ob))));
    }
    let sum = OperatorMatrix::new(pair.sum())?;
    let lo = 10f64.powf(-cfg.margin_decades) / sum.inverse_norm2();
    let hi = 10f64.powf(cfg.margin_decades) * sum.norm2();
    let decades = (hi / lo).log10();
    let nr = ((decades * cfg.radii_per_decade as f64).ceil() as usize).max(1);
    let na = cfg.angles.max(2);
    let mut mus = Vec::new();
    for i in 0..=nr {
        let r = lo * 10f64.powf(decades * i as f64 / nr as f64);
        for j in 0..na {
            let th = rho.angle + (std::f64::consts::PI - rho.angle) * j as f64 / (na - 1) as f64;
            mus.push(C64::from_polar(r, th));
            if th < std::f64::consts::PI {
                mus.push(C64::from_polar(r, -th));
            }
        }
    }
    let members = mus.iter().map(|&mu| Ok(resolvent(&sum, mu)? * mu)).collect::<Result<Vec<CMat>>>()?;
    let stride = (mus.len() / cfg.joint_checks.max(1)).max(1);
    let mut max_joint_error = 0.0f64;
    let mut checked = Vec::new();
    for (mu, direct) in mus.iter().zip(&members).step_by(stride).take(cfg.joint_checks) {
        let j = joint_fcalc(&pair.a, &pair.b, &BivariateFunction::f_mu(*mu), &JointOptions::default())?;
        max_joint_error = max_joint_error.max(rel_err(&j.value, direct));
        checked.push((*mu).into());
    }
    let fam = OperatorFamily::from_matrices(members, norm.clone())?;
    let estimate = r_bound(&fam, cfg.n, &cfg.sign, &cfg.search)?;
    Ok(SumSectoriality { estimate, samples: mus.len(), max_joint_error, checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{commuting_pair, RandomSpec};
    use crate::linalg::{c, identity, real_diag};

    fn pair(a: CMat, b: CMat) -> CommutingPair {
        CommutingPair::new(OperatorMatrix::new(a).unwrap(), OperatorMatrix::new(b).unwrap()).unwrap()
    }

    #[test]
    fn inverse_sum_examples() {
        let p = pair(identity(2), identity(2));
        let f = inverse_sum_operator(&p, &JointOptions::default()).unwrap();
        assert!(rel_err(&f.value, &(identity(2) * c(0.5, 0.0))) < 1e-6);
        let p = pair(real_diag(&[1.0, 3.0, 0.2]), real_diag(&[2.0, 1.0, 5.0]));
        let f = inverse_sum_operator(&p, &JointOptions::default()).unwrap();
        assert!(rel_err(&f.value, &real_diag(&[1.0 / 3.0, 0.75, 0.2 / 5.2])) < 1e-6);
    }

    #[test]
    fn angle_sum_precondition() {
        let a = crate::linalg::diag(&[C64::from_polar(1.0, 0.75 * std::f64::consts::PI), c(1.0, 0.0)]);
        let b = crate::linalg::diag(&[C64::from_polar(1.0, 0.5 * std::f64::consts::PI), c(2.0, 0.0)]);
        let p = pair(a, b);
        assert!(matches!(inverse_sum_operator(&p, &JointOptions::default()), Err(Error::AngleSumExceeded(_))));
    }

    #[test]
    fn closedness_examples() {
        let search = SearchConfig { starts: 8, ..Default::default() };
        let a = crate::linalg::from_real_rows(2, &[2.0, 1.0, 0.0, 3.0]);
        let p = pair(a.clone(), a);
        let e = sum_closedness_constant(&p, &NormSpec::lp(1.0), &search, &JointOptions::default()).unwrap();
        assert!((e.estimate.value - 1.0).abs() < 1e-12);
        let p = pair(real_diag(&[1.0, 4.0, 0.5]), real_diag(&[3.0, 0.1, 0.5]));
        for norm in [NormSpec::lp(1.0), NormSpec::l2(), NormSpec::lp(4.0)] {
            let e = sum_closedness_constant(&p, &norm, &search, &JointOptions::default()).unwrap();
            assert!(e.estimate.value >= 1.0 - 1e-12 && e.estimate.value <= 2.0 + 1e-12);
            assert!(e.estimate.value <= e.calculus_bound * (1.0 + 1e-6));
        }
    }

    #[test]
    fn closedness_matches_shared_basis_oracle() {
        let spec = RandomSpec { dim: 4, angle: std::f64::consts::FRAC_PI_6, max_cond: 1.0, ..Default::default() };
        let (a, b) = commuting_pair(11, &spec, std::f64::consts::FRAC_PI_3).unwrap();
        let p = CommutingPair::new(a, b).unwrap();
        let e = sum_closedness_constant(&p, &NormSpec::l2(), &SearchConfig::default(), &JointOptions::default()).unwrap();
        let ea = p.a.eigen();
        // Shared eigenvectors: pair the eigenvalues through B's action on A's eigenvectors.
        let mut pq = Vec::new();
        let mut vertex = 0.0f64;
        for j in 0..4 {
            let v: Vec<C64> = ea.vectors.column(j).iter().copied().collect();
            let bv = p.b.matrix().apply(&v);
            let lb = bv.iter().zip(&v).max_by(|x, y| x.1.norm().total_cmp(&y.1.norm())).map(|(x, y)| x / y).unwrap();
            let la = ea.values[j];
            let g = (la + lb).norm();
            vertex = vertex.max((la.norm() + lb.norm()) / g);
            pq.push(((la.norm() / g).powi(2), (lb.norm() / g).powi(2)));
        }
        // In the orthonormal eigenbasis the ratio is sqrt(p.v) + sqrt(q.v) over
        // the simplex; that concave maximum sits on an edge of the hull of the
        // points (p_i, q_i), found by ternary search on each segment.
        let mut oracle = vertex;
        for i in 0..4 {
            for j in 0..4 {
                let f = |t: f64| (t * pq[i].0 + (1.0 - t) * pq[j].0).sqrt() + (t * pq[i].1 + (1.0 - t) * pq[j].1).sqrt();
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..200 {
                    let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                    if f(m1) < f(m2) {
                        lo = m1;
                    } else {
                        hi = m2;
                    }
                }
                oracle = oracle.max(f(0.5 * (lo + hi)));
            }
        }
        assert!(e.estimate.value >= vertex * (1.0 - 1e-9));
        assert!((e.estimate.value - oracle).abs() <= 0.02 * oracle, "{} vs {oracle}", e.estimate.value);
    }

    #[test]
    fn sum_sectoriality_of_identity_pair() {
        let p = pair(identity(2), identity(2));
        let rho = Sector::new(0.75 * std::f64::consts::PI).unwrap();
        let r = sum_r_sectoriality(&p, rho, &NormSpec::l2(), &SumSampleConfig::default()).unwrap();
        assert!(r.max_joint_error < 1e-6, "{}", r.max_joint_error);
        // Scalar family μ/(μ-2): the R-bound is the sampled sup.
        let fam_sup = {
            let sum = OperatorMatrix::new(identity(2) * c(2.0, 0.0)).unwrap();
            let lo = 0.1 / sum.inverse_norm2();
            let hi = 10.0 * sum.norm2();
            let mut best = 0.0f64;
            let nr = ((hi / lo).log10() * 4.0).ceil() as usize;
            for i in 0..=nr {
                let rr = lo * 10f64.powf((hi / lo).log10() * i as f64 / nr as f64);
                for j in 0..4 {
                    let th = rho.angle + (std::f64::consts::PI - rho.angle) * j as f64 / 3.0;
                    let mu = C64::from_polar(rr, th);
                    best = best.max((mu / (mu - 2.0)).norm());
                }
            }
            best
        };
        assert!((r.estimate.value - fam_sup).abs() < 1e-9 * fam_sup);
    }
}
