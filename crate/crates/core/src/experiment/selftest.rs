use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Report, Table, Timing, VERSION};
use crate::calculus::{contour_fcalc, regularized_fcalc, scalar_tail, JointOptions};
use crate::contour::ContourSpec;
use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, ScalarFunction};
use crate::generators::{random_diagonalizable, RandomSpec};
use crate::linalg::{c, diag, from_real_rows, identity, norm2, real_diag, rel_err, CMat, C64};
use crate::norms::NormSpec;
use crate::operators::{
    approximate_identity, fractional_power, h_s_rho, phi, resolvent, sectorial_constant, spectral_angle, FractionalExponent,
    OperatorMatrix, Sector, SectorGrid,
};
use crate::rbound::{bounds_ordered, r_bound, OperatorFamily, SignConfig};
use crate::search::SearchConfig;
use crate::sums::{
    gt_absolute_integral, inverse_sum_operator, maximal_regularity_constant, s_delta_norm, sum_closedness_constant, CauchyProblem,
    CommutingPair,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Relative perturbation of the contour weights in the calculus cases.
    pub jitter: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { seed: 42, jitter: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestCase {
    pub id: String,
    /// `trivial` or `derived`.
    pub tag: String,
    pub passed: bool,
    /// Measured discrepancy (or the measured value for one-sided checks).
    pub error: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

struct Check {
    error: f64,
    tolerance: f64,
}

fn within(error: f64, tolerance: f64) -> Result<Check> {
    Ok(Check { error, tolerance })
}

fn holds(ok: bool) -> Result<Check> {
    within(if ok { 0.0 } else { 1.0 }, 0.0)
}

fn fails_with<T>(r: Result<T>, name: &str) -> Result<Check> {
    holds(matches!(r, Err(e) if e.name() == name))
}

fn op(m: CMat) -> Result<OperatorMatrix> {
    OperatorMatrix::new(m)
}

fn zf() -> ScalarFunction {
    FunctionSpec::ZOver1pzSq { sigma: None }.build().expect("built-in function")
}

struct Ctx {
    seed: u64,
    jitter: f64,
}

impl Ctx {
    /// The automatic contour, with the injected weight perturbation.
    fn contour(&self, a: &OperatorMatrix, f: &ScalarFunction) -> Result<Option<ContourSpec>> {
        if self.jitter == 0.0 {
            return Ok(None);
        }
        let decay = f.decay.ok_or_else(|| Error::MissingDecay(f.name.clone()))?;
        let tail = scalar_tail(a, decay.c, decay.eps);
        let spec = ContourSpec::auto(spectral_angle(a)?, f.domain_angle, &tail, 1e-12 * decay.c.max(1.0))?;
        Ok(Some(spec.with_jitter(self.jitter)))
    }

    fn fcalc(&self, a: &OperatorMatrix, f: &ScalarFunction) -> Result<CMat> {
        Ok(contour_fcalc(a, f, self.contour(a, f)?.as_ref())?.value)
    }

    fn search(&self) -> SearchConfig {
        SearchConfig { starts: 6, steps: 60, seed: self.seed, max_selections: 8 }
    }

    fn sign(&self) -> SignConfig {
        SignConfig { seed: self.seed, ..Default::default() }
    }
}

type CaseFn = fn(&Ctx) -> Result<Check>;

fn cases() -> Vec<(&'static str, &'static str, CaseFn)> {
    vec![
        ("resolvent.scalar", "trivial", |_| {
            let r = resolvent(&op(real_diag(&[1.0]))?, c(-1.0, 0.0))?;
            within((r[(0, 0)] - c(-0.5, 0.0)).norm(), 1e-14)
        }),
        ("resolvent.diagonal", "trivial", |_| {
            let r = resolvent(&op(real_diag(&[1.0, 2.0]))?, c(0.0, 3.0))?;
            within(rel_err(&r, &diag(&[1.0 / c(-1.0, 3.0), 1.0 / c(-2.0, 3.0)])), 1e-14)
        }),
        ("resolvent.singular", "trivial", |_| fails_with(resolvent(&op(real_diag(&[1.0]))?, c(1.0, 0.0)), "SingularResolvent")),
        ("angle.normal", "trivial", |_| {
            let a = op(diag(&[C64::from_polar(1.0, PI / 4.0), C64::from_polar(1.0, -PI / 4.0)]))?;
            within((spectral_angle(&a)? - PI / 4.0).abs(), 1e-12)
        }),
        ("angle.jordan", "trivial", |_| within(spectral_angle(&op(from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]))?)?.abs(), 1e-12)),
        ("angle.negative_eigenvalue", "trivial", |_| fails_with(spectral_angle(&op(real_diag(&[1.0, -1.0]))?), "NotSectorial")),
        ("sectorial.identity", "derived", |_| {
            let e = sectorial_constant(&op(identity(2))?, Sector::new(PI / 2.0)?, &NormSpec::l2(), &SectorGrid::default())?;
            within((e.value - 1.0).abs(), 1e-6)
        }),
        ("sectorial.smaller_region", "trivial", |_| {
            let a = op(identity(2))?;
            let g = SectorGrid::default();
            let wide = sectorial_constant(&a, Sector::new(PI / 2.0)?, &NormSpec::l2(), &g)?.value;
            let narrow = sectorial_constant(&a, Sector::new(PI / 2.0 + 0.3)?, &NormSpec::l2(), &g)?.value;
            within((narrow - wide).max(0.0), 1e-12)
        }),
        ("sectorial.diagonal_l1", "derived", |_| {
            let a = op(real_diag(&[1.0, 10.0]))?;
            let sigma = 0.75 * PI;
            let e = sectorial_constant(&a, Sector::new(sigma)?, &NormSpec::lp(1.0), &SectorGrid::default())?.value;
            // Dense sweep of |ζ| max(1/|ζ-1|, 1/|ζ-10|); the supremum is at arg ζ = σ.
            let mut brute = 0.0f64;
            for i in 0..=4000 {
                let r = 10f64.powf(-5.0 + 11.0 * i as f64 / 4000.0);
                for j in 0..=50 {
                    let z = C64::from_polar(r, sigma + (PI - sigma) * j as f64 / 50.0);
                    brute = brute.max(r * (1.0 / (z - 1.0).norm()).max(1.0 / (z - 10.0).norm()));
                }
            }
            within((e - brute).abs() / brute, 1e-3)
        }),
        ("phi.one_is_zero", "trivial", |_| {
            let a = op(from_real_rows(2, &[1.0, 2.0, 0.0, 3.0]))?;
            within(norm2(&approximate_identity(&a, 1.0)?) + phi(1.0, c(0.7, 2.0)).norm(), 1e-12)
        }),
        ("phi.two_at_one", "trivial", |_| within((phi(2.0, c(1.0, 0.0)) - c(1.0 / 3.0, 0.0)).norm(), 1e-15)),
        ("phi.approximate_identity_converges", "derived", |_| {
            let a = op(real_diag(&[1.0]))?;
            let errs: Vec<f64> = [2.0, 8.0, 32.0]
                .iter()
                .map(|&n| Ok((approximate_identity(&a, n)?[(0, 0)] - c(1.0, 0.0)).norm()))
                .collect::<Result<_>>()?;
            holds(errs[0] > errs[1] && errs[1] > errs[2])
        }),
        ("power.diagonal", "trivial", |_| {
            let p = fractional_power(&op(real_diag(&[1.0, 9.0]))?, FractionalExponent::new(0.5)?)?;
            within(rel_err(&p, &real_diag(&[1.0, 3.0])), 1e-12)
        }),
        ("power.identity", "trivial", |_| {
            let p = fractional_power(&op(identity(3))?, FractionalExponent::new(0.3)?)?;
            within(rel_err(&p, &identity(3)), 1e-12)
        }),
        ("power.jordan", "derived", |_| {
            let p = fractional_power(&op(from_real_rows(2, &[2.0, 1.0, 0.0, 2.0]))?, FractionalExponent::new(0.5)?)?;
            let r2 = 2f64.sqrt();
            within(rel_err(&p, &from_real_rows(2, &[r2, 0.5 / r2, 0.0, r2])), 1e-8)
        }),
        ("h_s_rho.value", "trivial", |_| {
            let v = h_s_rho(c(1.0, 0.0), FractionalExponent::new(0.5)?, PI / 2.0)?;
            within((v - c(-0.5, -0.5)).norm(), 1e-15)
        }),
        ("fcalc.identity", "trivial", |ctx| {
            let a = op(identity(2))?;
            within(rel_err(&ctx.fcalc(&a, &zf())?, &(identity(2) * c(0.25, 0.0))), 1e-10)
        }),
        ("fcalc.diagonal", "trivial", |ctx| {
            let a = op(real_diag(&[1.0, 4.0]))?;
            within(rel_err(&ctx.fcalc(&a, &zf())?, &real_diag(&[0.25, 0.16])), 1e-10)
        }),
        ("fcalc.eigen_oracle", "derived", |ctx| {
            let a = random_diagonalizable(ctx.seed, &RandomSpec { dim: 6, max_cond: 100.0, ..Default::default() })?;
            let f = zf();
            within(rel_err(&ctx.fcalc(&a, &f)?, &a.eigen().apply(|z| f.eval(z))), 1e-6)
        }),
        ("fcalc.multiplicativity", "derived", |ctx| {
            let a = random_diagonalizable(ctx.seed ^ 1, &RandomSpec { dim: 5, ..Default::default() })?;
            let f = zf();
            let g = FunctionSpec::HSRho { s: 0.3, rho: 2.5, sigma: None }.build()?;
            let fg = f.product(&g);
            let lhs = ctx.fcalc(&a, &fg)?;
            within(rel_err(&lhs, &(ctx.fcalc(&a, &f)? * ctx.fcalc(&a, &g)?)), 1e-8)
        }),
        ("fcalc.contour_independence", "derived", |ctx| {
            let a = random_diagonalizable(ctx.seed ^ 2, &RandomSpec { dim: 4, ..Default::default() })?;
            let f = zf();
            let omega = spectral_angle(&a)?;
            let tail = scalar_tail(&a, f.decay.expect("certified").c, f.decay.expect("certified").eps);
            let base = ContourSpec::auto(omega, f.domain_angle, &tail, 1e-12)?;
            let npd = crate::contour::nodes_per_decade_for(0.3 * (f.domain_angle - omega));
            let one = ContourSpec { angle: omega + 0.3 * (f.domain_angle - omega), nodes_per_decade: npd, ..base.clone() };
            let two = ContourSpec { angle: omega + 0.7 * (f.domain_angle - omega), nodes_per_decade: npd, ..base };
            let (x, y) = (contour_fcalc(&a, &f, Some(&one))?.value, contour_fcalc(&a, &f, Some(&two))?.value);
            within(rel_err(&x, &y), 1e-8)
        }),
        ("regularized.one", "trivial", |_| {
            let a = op(from_real_rows(2, &[1.0, 0.5, 0.0, 3.0]))?;
            let r = regularized_fcalc(&a, &FunctionSpec::One { sigma: None }.build()?, None, 64, 1e8)?;
            within(rel_err(&r.value, &identity(2)), 1e-8)
        }),
        ("regularized.resolvent", "derived", |_| {
            let a = op(from_real_rows(2, &[1.0, 0.5, 0.0, 3.0]))?;
            let lambda = c(-1.0, 0.5);
            let f = FunctionSpec::Resolvent { lambda: lambda.into() }.build()?;
            let r = regularized_fcalc(&a, &f, None, 64, 1e8)?;
            within(rel_err(&r.value, &resolvent(&a, lambda)?), 1e-7)
        }),
        ("regularized.imaginary_power", "derived", |_| {
            let e = std::f64::consts::E;
            let f = FunctionSpec::ImagPower { b: 1.0, sigma: None }.build()?;
            let r = regularized_fcalc(&op(real_diag(&[1.0, e]))?, &f, None, 64, 1e8)?;
            within(rel_err(&r.value, &diag(&[c(1.0, 0.0), C64::from_polar(1.0, 1.0)])), 1e-7)
        }),
        ("rbound.singleton", "trivial", |ctx| {
            let t = from_real_rows(2, &[1.0, 2.0, -0.5, 0.3]);
            let fam = OperatorFamily::from_matrices(vec![t.clone()], NormSpec::l2())?;
            within((r_bound(&fam, 2, &ctx.sign(), &ctx.search())?.value - norm2(&t)).abs() / norm2(&t), 1e-6)
        }),
        ("rbound.scalar_family", "derived", |ctx| {
            let fam = OperatorFamily::from_matrices(vec![identity(2), identity(2) * c(2.0, 0.0)], NormSpec::l2())?;
            within((r_bound(&fam, 2, &ctx.sign(), &ctx.search())?.value - 2.0).abs() / 2.0, 0.02)
        }),
        ("rbound.ordering", "derived", |ctx| {
            let members = (0..3)
                .map(|k| Ok(random_diagonalizable(ctx.seed ^ (10 + k), &RandomSpec { dim: 3, ..Default::default() })?.matrix().clone()))
                .collect::<Result<Vec<_>>>()?;
            let fam = OperatorFamily::from_matrices(members, NormSpec::lp(1.0))?;
            let b = bounds_ordered(&fam, 2, &ctx.sign(), &ctx.search())?;
            let excess = (b.u.value / b.wr.value - 1.03).max(b.wr.value / b.r.value - 1.03).max(0.0);
            within(excess, 0.0)
        }),
        ("sum.inverse_identity", "trivial", |_| {
            let p = CommutingPair::new(op(identity(2))?, op(identity(2))?)?;
            let f = inverse_sum_operator(&p, &JointOptions::default())?;
            within(rel_err(&f.value, &(identity(2) * c(0.5, 0.0))), 1e-6)
        }),
        ("sum.inverse_diagonal", "derived", |_| {
            let p = CommutingPair::new(op(real_diag(&[1.0, 3.0]))?, op(real_diag(&[2.0, 1.0]))?)?;
            let f = inverse_sum_operator(&p, &JointOptions::default())?;
            within(rel_err(&f.value, &real_diag(&[1.0 / 3.0, 0.75])), 1e-6)
        }),
        ("sum.angle_sum_exceeded", "trivial", |_| {
            let a = op(diag(&[C64::from_polar(1.0, 0.75 * PI), c(1.0, 0.0)]))?;
            let b = op(diag(&[C64::from_polar(1.0, 0.5 * PI), c(2.0, 0.0)]))?;
            fails_with(inverse_sum_operator(&CommutingPair::new(a, b)?, &JointOptions::default()), "AngleSumExceeded")
        }),
        ("sum.closedness_equal_pair", "trivial", |ctx| {
            let a = from_real_rows(2, &[2.0, 1.0, 0.0, 3.0]);
            let p = CommutingPair::new(op(a.clone())?, op(a)?)?;
            let e = sum_closedness_constant(&p, &NormSpec::lp(1.0), &ctx.search(), &JointOptions::default())?;
            within((e.estimate.value - 1.0).abs(), 1e-12)
        }),
        ("maxreg.small_generator", "trivial", |ctx| {
            let prob = CauchyProblem::new(op(identity(2) * c(1e-4, 0.0))?, 1.0, 32, 2.0)?;
            let r = maximal_regularity_constant(&prob, &[32], &ctx.search())?;
            within(r.levels[0].a_part, 1e-3)
        }),
        ("maxreg.angle_exceeded", "trivial", |_| {
            let a = op(diag(&[C64::from_polar(1.0, 1.7), c(1.0, 0.0)]))?;
            fails_with(CauchyProblem::new(a, 1.0, 16, 2.0), "AngleExceeded")
        }),
        ("s_delta.beyond_horizon", "trivial", |ctx| {
            within(s_delta_norm(&op(real_diag(&[1.0, 2.0]))?, 1.5, 2.0, 1.0, 32, &ctx.search())?.value, 1e-14)
        }),
        ("gt.zero_vector", "trivial", |_| {
            let x = [c(0.0, 0.0); 2];
            let r = gt_absolute_integral(&op(real_diag(&[1.0, 2.0]))?, FractionalExponent::new(0.5)?, 1.0, &x, &NormSpec::lp(1.0), None)?;
            within(r.value, 0.0)
        }),
        ("gt.scale_free", "derived", |_| {
            let s = FractionalExponent::new(0.5)?;
            let v = |a: f64| -> Result<f64> {
                Ok(gt_absolute_integral(&op(real_diag(&[a]))?, s, 1.0, &[c(1.0, 0.0)], &NormSpec::lp(1.0), None)?.value)
            };
            let (lo, mid, hi) = (v(0.5)?, v(1.0)?, v(5.0)?);
            within(((lo - mid).abs()).max((hi - mid).abs()) / mid, 0.01)
        }),
    ]
}

/// Outcome of the self-test: the report plus the failing case ids.
pub fn selftest(opts: &SelftestOptions) -> (Report, Vec<String>) {
    let start = Instant::now();
    let ctx = Ctx { seed: opts.seed, jitter: opts.jitter };
    let mut results = Vec::new();
    for (id, tag, f) in cases() {
        let case = match f(&ctx) {
            Ok(ch) => SelftestCase {
                id: id.into(),
                tag: tag.into(),
                passed: ch.error <= ch.tolerance,
                error: ch.error,
                tolerance: ch.tolerance,
                message: None,
            },
            Err(e) => SelftestCase {
                id: id.into(),
                tag: tag.into(),
                passed: false,
                error: f64::INFINITY,
                tolerance: 0.0,
                message: Some(e.to_string()),
            },
        };
        results.push(case);
    }
    let failed: Vec<String> = results.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect();
    let mut table = Table::new(&["id", "tag", "status", "error", "tolerance"]);
    for c in &results {
        table.push(vec![
            c.id.clone(),
            c.tag.clone(),
            if c.passed { "pass" } else { "FAIL" }.into(),
            format!("{:e}", c.error),
            format!("{:e}", c.tolerance),
        ]);
    }
    let report = Report {
        command: "selftest".into(),
        version: VERSION.into(),
        config: json!(opts),
        results: json!({ "passed": results.len() - failed.len(), "failed": failed, "cases": results }),
        table: Some(table),
        timing: Timing { total_seconds: start.elapsed().as_secs_f64() },
    };
    (report, failed)
}
