//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p hinf-core --test acceptance`.

use std::f64::consts::PI;
use std::time::Instant;

use hinf_core::calculus::{
    contour_fcalc, dyadic_reconstruction, operator_fcalc, regularized_fcalc, JointOptions,
};
use hinf_core::contour::{nodes_per_decade_for, ContourSpec};
use hinf_core::experiment::{selftest, SelftestOptions};
use hinf_core::functions::{FunctionSpec, OperatorFunction, ScalarFunction};
use hinf_core::generators::{commuting_pair, random_basis, random_diagonalizable, random_unitary, sector_spectrum, RandomSpec};
use hinf_core::linalg::{c, cond2, diag, identity, inverse, norm2, rel_err, CMat, C64};
use hinf_core::operators::{approximate_identity, resolvent, spectral_angle, FractionalExponent, OperatorMatrix};
use hinf_core::rbound::{bounds_ordered, r_bound, OperatorFamily, SignConfig};
use hinf_core::search::{gaussian_vector, stream, SearchConfig};
use hinf_core::sums::{
    gt_absolute_integral, gt_ratio_interval, inverse_sum_operator, maximal_regularity_constant, sum_closedness_constant,
    CauchyProblem, CommutingPair,
};
use hinf_core::NormSpec;

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn zf() -> ScalarFunction {
    FunctionSpec::ZOver1pzSq { sigma: None }.build().unwrap()
}

fn search(seed: u64) -> SearchConfig {
    SearchConfig { starts: 8, steps: 80, seed, max_selections: 8 }
}

/// Eigenbasis and spectrum of `V diag(λ) V^{-1}`, planted here so the oracle
/// never touches the library's eigensolver.
fn planted(seed: u64, d: usize, max_cond: f64) -> (CMat, Vec<C64>) {
    let mut rng = stream(seed, 0x0ac1e);
    let lam = sector_spectrum(&mut rng, d, PI / 6.0, 0.1, 10.0);
    (random_basis(&mut rng, d, max_cond), lam)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let f = zf();
    let (mut worst, mut worst_cond) = (0.0f64, 0.0f64);
    for i in 0..50u64 {
        let d = 1 + (i as usize * 7) % 20;
        let (v, lam) = planted(100 + i, d, 900.0);
        let vi = inverse(&v).ok_or("singular basis")?;
        worst_cond = worst_cond.max(cond2(&v));
        let a = OperatorMatrix::new(&v * diag(&lam) * &vi).map_err(err)?;
        let fl: Vec<C64> = lam.iter().map(|&z| z / ((1.0 + z) * (1.0 + z))).collect();
        let oracle = &v * diag(&fl) * &vi;
        worst = worst.max(rel_err(&contour_fcalc(&a, &f, None).map_err(err)?.value, &oracle));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-6 && secs <= 10.0 && worst_cond < 1e3,
        format!("max rel err {worst:.2e} (tol 1e-6), max cond(V) {worst_cond:.0}, {secs:.2} s (limit 10 s)"),
    ))
}

fn criterion_2() -> Outcome {
    let f = zf();
    let g = FunctionSpec::HSRho { s: 0.3, rho: 2.5, sigma: None }.build().map_err(err)?;
    let (mut mult, mut indep, mut dil, mut rat) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..20u64 {
        let a = random_diagonalizable(200 + i, &RandomSpec { dim: 2 + i as usize % 7, max_cond: 20.0, ..Default::default() })
            .map_err(err)?;

        let fa = contour_fcalc(&a, &f, None).map_err(err)?.value;
        let ga = contour_fcalc(&a, &g, None).map_err(err)?.value;
        let fga = contour_fcalc(&a, &f.product(&g), None).map_err(err)?.value;
        mult = mult.max(norm2(&(&fga - &fa * &ga)) / ((1.0 + norm2(&fa)) * (1.0 + norm2(&ga))));

        let omega = spectral_angle(&a).map_err(err)?;
        let base = contour_fcalc(&a, &f, None).map_err(err)?.contour;
        let npd = nodes_per_decade_for(0.3 * (f.domain_angle - omega));
        let at = |frac: f64| ContourSpec { angle: omega + frac * (f.domain_angle - omega), nodes_per_decade: npd, ..base.clone() };
        let x = contour_fcalc(&a, &f, Some(&at(0.3))).map_err(err)?.value;
        let y = contour_fcalc(&a, &f, Some(&at(0.75))).map_err(err)?.value;
        indep = indep.max(rel_err(&x, &y));

        let t = 0.2 + 0.4 * i as f64;
        let lhs = contour_fcalc(&a.scaled(t), &f, None).map_err(err)?.value;
        let rhs = contour_fcalc(&a, &f.dilate(t), None).map_err(err)?.value;
        dil = dil.max(rel_err(&lhs, &rhs));

        let lambda = C64::from_polar(0.5 + 0.2 * i as f64, if i % 2 == 0 { 1.0 } else { -1.0 } * (PI / 2.0 + 0.05 * i as f64));
        let r = regularized_fcalc(&a, &FunctionSpec::Resolvent { lambda: lambda.into() }.build().map_err(err)?, None, 64, 1e8)
            .map_err(err)?;
        rat = rat.max(rel_err(&r.value, &resolvent(&a, lambda).map_err(err)?));
    }
    Ok((
        mult <= 1e-6 && indep <= 1e-6 && dil <= 1e-8 && rat <= 1e-8,
        format!(
            "multiplicativity {mult:.1e} (1e-6), contour independence {indep:.1e} (1e-6), dilation {dil:.1e} (1e-8), rational {rat:.1e} (1e-8)"
        ),
    ))
}

fn criterion_3() -> Outcome {
    let mut phi1 = 0.0f64;
    let mut monotone = 0;
    let mut detail = String::new();
    for i in 0..10u64 {
        let a = random_diagonalizable(300 + i, &RandomSpec { dim: 2 + i as usize % 6, ..Default::default() }).map_err(err)?;
        phi1 = phi1.max(norm2(&approximate_identity(&a, 1.0).map_err(err)?));
        let x = gaussian_vector(&mut stream(300 + i, 1), a.dim());
        let l2 = NormSpec::l2();
        let errs: Vec<f64> = (1..=7)
            .map(|k| {
                let v = approximate_identity(&a, 2f64.powi(k)).map_err(err)?;
                let vx: Vec<C64> = (0..a.dim()).map(|r| (0..a.dim()).map(|j| v[(r, j)] * x[j]).sum::<C64>() - x[r]).collect();
                Ok(l2.norm(&vx))
            })
            .collect::<Result<_, String>>()?;
        if errs.windows(2).all(|w| w[1] < w[0]) {
            monotone += 1;
        } else if detail.is_empty() {
            detail = format!(", first failure {errs:?}");
        }
    }
    Ok((phi1 <= 1e-12 && monotone == 10, format!("max ||φ_1(A)|| {phi1:.1e} (1e-12), strictly decreasing in {monotone}/10{detail}")))
}

fn criterion_4() -> Outcome {
    let s = FractionalExponent::new(0.5).map_err(err)?;
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let a = random_diagonalizable(400 + i, &RandomSpec { dim: 2 + i as usize % 5, r_lo: 0.3, r_hi: 5.0, ..Default::default() })
            .map_err(err)?;
        let d = a.dim();
        let f = if i % 2 == 0 {
            OperatorFunction::scalar(&FunctionSpec::Phi { n: 2.0, sigma: None }.build().map_err(err)?, d)
        } else {
            // A genuinely operator-valued F: z(1+z)^{-2} times (I + A)^{-1}.
            let m = inverse(&(identity(d) + a.matrix())).ok_or("I + A singular")?;
            OperatorFunction::scalar_times(&zf(), m)
        };
        let omega = spectral_angle(&a).map_err(err)?;
        let nu = 0.5 * (omega + f.domain_angle);
        let rec = dyadic_reconstruction(&a, &f, s, nu, 32, None).map_err(err)?;
        let direct = operator_fcalc(&a, &f, s, None).map_err(err)?.value;
        worst = worst.max(rel_err(&rec, &direct));
    }
    Ok((worst <= 1e-5, format!("max rel err {worst:.2e} (tol 1e-5)")))
}

fn criterion_5() -> Outcome {
    let sign = |seed| SignConfig { seed, ..Default::default() };
    let mut hilbert = 0.0f64;
    for i in 0..20u64 {
        let mut rng = stream(500 + i, 0);
        let members: Vec<CMat> = (0..3).map(|_| CMat::from_column_slice(3, 3, &gaussian_vector(&mut rng, 9))).collect();
        let want = members.iter().map(norm2).fold(0.0, f64::max);
        let fam = OperatorFamily::from_matrices(members, NormSpec::l2()).map_err(err)?;
        let got = r_bound(&fam, 2, &sign(i), &search(i)).map_err(err)?.value;
        hilbert = hilbert.max((got - want).abs() / want);
    }

    let norms = [
        NormSpec::lp(1.0),
        NormSpec::lp(1.5),
        NormSpec::l2(),
        NormSpec::lp(3.0),
        NormSpec::lp(f64::INFINITY),
        NormSpec::grid(2, 1.0, 2.0),
        NormSpec::grid(2, 3.0, 1.5),
    ];
    let coeffs = [0.5, -2.0, 1.3];
    let mut scalar = 0.0f64;
    for (k, norm) in norms.iter().enumerate() {
        let members = coeffs.iter().map(|&ck| identity(4) * c(ck, 0.0)).collect();
        let fam = OperatorFamily::from_matrices(members, norm.clone()).map_err(err)?;
        let got = r_bound(&fam, 3, &sign(k as u64), &search(k as u64)).map_err(err)?.value;
        scalar = scalar.max((got - 2.0).abs() / 2.0);
    }

    let mut excess = 0.0f64;
    for i in 0..20u64 {
        let norm = norms[[0, 3, 4, 5][i as usize % 4]].clone();
        let members = (0..3)
            .map(|k| Ok(random_diagonalizable(550 + 3 * i + k, &RandomSpec { dim: 4, ..Default::default() }).map_err(err)?.matrix().clone()))
            .collect::<Result<Vec<_>, String>>()?;
        let fam = OperatorFamily::from_matrices(members, norm).map_err(err)?;
        let b = bounds_ordered(&fam, 2, &sign(i), &search(i)).map_err(err)?;
        excess = excess.max(b.u.value / b.wr.value - 1.0).max(b.wr.value / b.r.value - 1.0);
    }
    Ok((
        hilbert <= 0.02 && scalar <= 0.02 && excess <= 0.03,
        format!(
            "ℓ2 vs max ||T_k|| {:.2}% (2%), scalar families over {} norms {:.2}% (2%), worst ordering excess {:.2}% (3%)",
            100.0 * hilbert,
            norms.len(),
            100.0 * scalar,
            100.0 * excess.max(0.0)
        ),
    ))
}

/// `max_{x ≠ 0} (||Ax|| + ||Bx||) / ||(A+B)x||` in ℓ2 for `A = U diag(a) U*`,
/// `B = U diag(b) U*`. With `v_i = |y_i|²` on the simplex the ratio is
/// `√(p·v) + √(q·v)`; that concave function peaks on an edge between two
/// vertices, searched here by ternary search on every pair.
fn shared_basis_oracle(a: &[C64], b: &[C64]) -> f64 {
    let pq: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let s = (x + y).norm_sqr();
            (x.norm_sqr() / s, y.norm_sqr() / s)
        })
        .collect();
    let val = |i: usize, j: usize, t: f64| {
        let p = (1.0 - t) * pq[i].0 + t * pq[j].0;
        let q = (1.0 - t) * pq[i].1 + t * pq[j].1;
        p.sqrt() + q.sqrt()
    };
    let mut best = 0.0f64;
    for i in 0..pq.len() {
        for j in i..pq.len() {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                if val(i, j, m1) < val(i, j, m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            best = best.max(val(i, j, 0.5 * (lo + hi))).max(val(i, j, 0.0)).max(val(i, j, 1.0));
        }
    }
    best
}

fn criterion_6() -> Outcome {
    let opts = JointOptions::default();
    let mut inverse_err = 0.0f64;
    for i in 0..20u64 {
        let angle_a = 0.2 + 0.1 * (i % 10) as f64;
        let angle_b = PI - angle_a - 0.4;
        let spec = RandomSpec { dim: 2 + i as usize % 5, angle: angle_a, max_cond: 10.0, ..Default::default() };
        let (a, b) = commuting_pair(600 + i, &spec, angle_b).map_err(err)?;
        let pair = CommutingPair::new(a, b).map_err(err)?;
        let f = inverse_sum_operator(&pair, &opts).map_err(err)?.value;
        inverse_err = inverse_err.max(rel_err(&(f * pair.sum()), pair.a.matrix()));
    }

    let mut oracle_err = 0.0f64;
    for i in 0..10u64 {
        let mut rng = stream(650 + i, 0);
        let d = 2 + i as usize % 4;
        let la = sector_spectrum(&mut rng, d, 0.8, 0.1, 10.0);
        let lb = sector_spectrum(&mut rng, d, 1.2, 0.1, 10.0);
        let u = random_unitary(&mut rng, d);
        let conj = |l: &[C64]| OperatorMatrix::new(&u * diag(l) * u.adjoint());
        let pair = CommutingPair::new(conj(&la).map_err(err)?, conj(&lb).map_err(err)?).map_err(err)?;
        let est = sum_closedness_constant(&pair, &NormSpec::l2(), &SearchConfig { starts: 16, ..search(i) }, &opts).map_err(err)?;
        let exact = shared_basis_oracle(&la, &lb);
        oracle_err = oracle_err.max((est.estimate.value - exact).abs() / exact);
    }

    let mut equal = 0.0f64;
    for i in 0..5u64 {
        let a = random_diagonalizable(680 + i, &RandomSpec { dim: 3, ..Default::default() }).map_err(err)?;
        let pair = CommutingPair::new(a.clone(), a).map_err(err)?;
        for norm in [NormSpec::l2(), NormSpec::lp(1.0), NormSpec::lp(3.0)] {
            let est = sum_closedness_constant(&pair, &norm, &search(i), &opts).map_err(err)?;
            equal = equal.max((est.estimate.value - 1.0).abs());
        }
    }
    Ok((
        inverse_err <= 1e-6 && oracle_err <= 0.02 && equal <= 1e-12,
        format!(
            "||f(A,B)(A+B) - A|| rel {inverse_err:.1e} (1e-6), closedness vs shared-basis oracle {:.3}% (2%), |C - 1| for A = B {equal:.1e}",
            100.0 * oracle_err
        ),
    ))
}

fn criterion_7() -> Outcome {
    let scalar = CauchyProblem::new(OperatorMatrix::new(identity(2) * c(200.0, 0.0)).map_err(err)?, 1.0, 512, 2.0).map_err(err)?;
    let r = maximal_regularity_constant(&scalar, &[64, 128, 256, 512], &search(7)).map_err(err)?;
    let trace: Vec<String> = r.levels.iter().map(|l| format!("{:.4}", l.a_part)).collect();
    let last = r.levels.last().ok_or("no levels")?.a_part;

    let a = random_diagonalizable(700, &RandomSpec { dim: 8, angle: 1.2, max_cond: 1.0, ..Default::default() }).map_err(err)?;
    let start = Instant::now();
    let normal = CauchyProblem::new(a, 1.0, 512, 2.0).map_err(err)?;
    let n = maximal_regularity_constant(&normal, &[256, 512], &search(7)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        (last - 1.0).abs() <= 0.03 && n.drift <= 0.10 && secs <= 60.0,
        format!(
            "aI (a = 200, T = 1) Ã-part over m = 64..512: [{}] (|·-1| ≤ 3%), normal d = 8 drift 256→512 {:.2}% (10%), {secs:.1} s (60 s)",
            trace.join(", "),
            100.0 * n.drift
        ),
    ))
}

fn criterion_8() -> Outcome {
    let l1 = NormSpec::lp(1.0);
    let mut spread = 0.0f64;
    for s in [0.3, 0.5, 0.8] {
        let s = FractionalExponent::new(s).map_err(err)?;
        let vals = [1e-3, 0.1, 1.0, 10.0, 1e3]
            .iter()
            .map(|&a| {
                let m = OperatorMatrix::new(identity(1) * c(a, 0.0)).map_err(err)?;
                Ok(gt_absolute_integral(&m, s, 1.0, &[c(1.0, 0.0)], &l1, None).map_err(err)?.value)
            })
            .collect::<Result<Vec<f64>, String>>()?;
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        spread = spread.max((hi - lo) / lo);
    }

    let a = random_diagonalizable(800, &RandomSpec { dim: 8, ..Default::default() }).map_err(err)?;
    let s = FractionalExponent::new(0.5).map_err(err)?;
    let coarse = gt_ratio_interval(&a, s, 1.2, 100, 801, None).map_err(err)?;
    let fine = gt_ratio_interval(&a, s, 1.2, 100, 801, Some(2 * coarse.nodes_per_decade)).map_err(err)?;
    let change = ((coarse.min - fine.min).abs() / fine.min).max((coarse.max - fine.max).abs() / fine.max);
    Ok((
        spread <= 0.01 && change <= 0.05,
        format!(
            "d = 1 spread over a ∈ [1e-3, 1e3] {:.2e} (1%), ℓ1(8) interval [{:.4}, {:.4}] at {} nodes/decade, endpoint change {:.2e} under doubling (5%)",
            spread, fine.min, fine.max, coarse.nodes_per_decade, change
        ),
    ))
}

fn criterion_9() -> Outcome {
    let opts = SelftestOptions { seed: 42, jitter: 0.0 };
    let (one, failed) = selftest(&opts);
    let (two, _) = selftest(&opts);
    let same = one.numerical_json() == two.numerical_json();
    Ok((same, format!("identical numerical output: {same}, {} self-test case(s) failing", failed.len())))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("eigen-oracle equivalence", criterion_1),
        ("calculus algebra", criterion_2),
        ("regularization", criterion_3),
        ("decomposition reconstruction", criterion_4),
        ("boundedness estimators", criterion_5),
        ("sum theorem", criterion_6),
        ("maximal regularity", criterion_7),
        ("GT estimate", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!("criterion {} {:<30} {}  {}", k + 1, name, if ok { "PASS" } else { "FAIL" }, detail);
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
