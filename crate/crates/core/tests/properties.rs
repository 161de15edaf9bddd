use std::f64::consts::PI;

use hinf_core::calculus::{best_real_signs, contour_fcalc, JointOptions};
use hinf_core::functions::{phi_n, FunctionSpec};
use hinf_core::generators::{commuting_pair, random_diagonalizable, RandomSpec};
use hinf_core::linalg::{c, commutator_norm, identity, norm2, rel_err, CMat, C64};
use hinf_core::operators::{approximate_identity, fractional_power, resolvent, spectral_angle, FractionalExponent, OperatorMatrix};
use hinf_core::rbound::{rademacher_mean, sign_max, SignConfig};
use hinf_core::search::{for_each_sign_pattern, gaussian_vector, stream};
use hinf_core::sums::{gt_absolute_integral, inverse_sum_operator, CommutingPair};
use hinf_core::NormSpec;
use proptest::prelude::*;

fn operator(seed: u64, dim: usize) -> OperatorMatrix {
    random_diagonalizable(seed, &RandomSpec { dim, ..Default::default() }).unwrap()
}

fn apply(m: &CMat, x: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

fn norm_strategy() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::lp(1.0)),
        Just(NormSpec::l2()),
        Just(NormSpec::lp(f64::INFINITY)),
        (1.1f64..6.0).prop_map(NormSpec::lp),
    ]
}

fn off_sector(r: f64, t: f64) -> C64 {
    // Angles in [π/2, π] on either side, away from the π/6 spectrum.
    C64::from_polar(r, if t >= 0.0 { PI / 2.0 + t } else { -PI / 2.0 + t })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn resolvent_identity(seed in any::<u64>(), dim in 1usize..7, r1 in 0.05f64..20.0, r2 in 0.05f64..20.0,
                          t1 in -1.5f64..1.5, t2 in -1.5f64..1.5) {
        let a = operator(seed, dim);
        let (l, m) = (off_sector(r1, t1), off_sector(r2, t2));
        let (rl, rm) = (resolvent(&a, l).unwrap(), resolvent(&a, m).unwrap());
        let lhs = &rl - &rm;
        let rhs = &rl * &rm * (m - l);
        prop_assert!(norm2(&(lhs - &rhs)) <= 1e-10 * (1.0 + norm2(&rl) * norm2(&rm) * (m - l).norm()));
    }

    #[test]
    fn spectral_angle_is_scale_invariant(seed in any::<u64>(), dim in 1usize..7, t in 1e-3f64..1e3) {
        let a = operator(seed, dim);
        let (w, wt) = (spectral_angle(&a).unwrap(), spectral_angle(&a.scaled(t)).unwrap());
        prop_assert!((w - wt).abs() < 1e-9);
        prop_assert!(w <= PI / 6.0 + 1e-9);
    }

    #[test]
    fn calculus_commutes_with_dilation(seed in any::<u64>(), dim in 1usize..5, t in 0.05f64..20.0) {
        let a = operator(seed, dim);
        let f = FunctionSpec::ZOver1pzSq { sigma: None }.build().unwrap();
        let lhs = contour_fcalc(&a.scaled(t), &f, None).unwrap().value;
        let rhs = contour_fcalc(&a, &f.dilate(t), None).unwrap().value;
        prop_assert!(rel_err(&lhs, &rhs) < 1e-8);
    }

    #[test]
    fn approximate_identities_commute_with_a(seed in any::<u64>(), dim in 1usize..7, n in 1.0f64..200.0) {
        let a = operator(seed, dim);
        let v = approximate_identity(&a, n).unwrap();
        prop_assert!(commutator_norm(a.matrix(), &v) <= 1e-10 * (1.0 + norm2(a.matrix()) * norm2(&v)));
    }

    #[test]
    fn phi_is_inversion_symmetric(n in 1.0f64..100.0, r in 1e-3f64..1e3, th in -3.0f64..3.0) {
        let z = C64::from_polar(r, th);
        let (a, b) = (phi_n(n, z), phi_n(n, 1.0 / z));
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn fractional_powers_compose(seed in any::<u64>(), dim in 1usize..6, s in 0.05f64..0.45, t in 0.05f64..0.5) {
        let a = operator(seed, dim);
        let p = |e: f64| fractional_power(&a, FractionalExponent::new(e).unwrap()).unwrap();
        prop_assert!(rel_err(&(p(s) * p(t)), &p(s + t)) < 1e-8);
        let h = p(0.5);
        prop_assert!(rel_err(&(&h * &h), a.matrix()) < 1e-8);
    }

    #[test]
    fn inverse_sum_residual(seed in any::<u64>(), dim in 1usize..5, wa in 0.1f64..1.4, gap in 0.2f64..1.0) {
        let wb = (PI - wa - gap).max(0.05);
        let (a, b) = commuting_pair(seed, &RandomSpec { dim, angle: wa, ..Default::default() }, wb).unwrap();
        let pair = CommutingPair::new(a, b).unwrap();
        let f = inverse_sum_operator(&pair, &JointOptions::default()).unwrap().value;
        prop_assert!(rel_err(&(&f * pair.sum()), pair.a.matrix()) < 1e-6);
        prop_assert!(rel_err(&(pair.sum() * &f), pair.a.matrix()) < 1e-6);
    }

    #[test]
    fn norming_functionals_attain_the_norm(seed in any::<u64>(), dim in 1usize..9, norm in norm_strategy()) {
        let x = gaussian_vector(&mut stream(seed, 0), dim);
        let xs = norm.norming_functional(&x);
        let pairing: C64 = x.iter().zip(&xs).map(|(a, b)| a * b).sum();
        let n = norm.norm(&x);
        prop_assert!((pairing - c(n, 0.0)).norm() <= 1e-10 * n);
        prop_assert!((norm.dual().norm(&xs) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn sign_averages_are_ordered(seed in any::<u64>(), dim in 1usize..5, n in 1usize..7, norm in norm_strategy()) {
        let mut rng = stream(seed, 1);
        let xs: Vec<Vec<C64>> = (0..n).map(|_| gaussian_vector(&mut rng, dim)).collect();
        let sign = SignConfig::default();
        let mean = rademacher_mean(&xs, &norm, &sign).unwrap();
        let max = sign_max(&xs, &norm, &sign).unwrap();
        prop_assert!(mean.exhaustive);
        prop_assert!(mean.value <= max * (1.0 + 1e-12));
        // Every single vector is a conditional expectation of the sum.
        for x in &xs {
            prop_assert!(norm.norm(x) <= mean.value * (1.0 + 1e-12));
        }
    }

    #[test]
    fn best_real_signs_match_enumeration(seed in any::<u64>(), n in 1usize..10) {
        let a = gaussian_vector(&mut stream(seed, 2), n);
        let (best, signs) = best_real_signs(&a);
        let mut brute = 0.0f64;
        for_each_sign_pattern(n, |eps, _| {
            brute = brute.max(a.iter().zip(eps).map(|(z, e)| z * *e).sum::<C64>().norm());
        });
        prop_assert!((best - brute).abs() <= 1e-12 * (1.0 + brute));
        let attained = a.iter().zip(&signs).map(|(z, e)| z * *e).sum::<C64>().norm();
        prop_assert!((attained - best).abs() <= 1e-12 * (1.0 + best));
    }

    #[test]
    fn absolute_integral_is_homogeneous(seed in any::<u64>(), dim in 1usize..5, alpha in 0.01f64..100.0) {
        let a = operator(seed, dim);
        let x = gaussian_vector(&mut stream(seed, 3), dim);
        let ax: Vec<C64> = x.iter().map(|z| z * alpha).collect();
        let half = FractionalExponent::new(0.5).unwrap();
        let l1 = NormSpec::lp(1.0);
        let v = gt_absolute_integral(&a, half, 1.2, &x, &l1, Some(20)).unwrap();
        let va = gt_absolute_integral(&a, half, 1.2, &ax, &l1, Some(20)).unwrap();
        prop_assert!((va.value - alpha * v.value).abs() <= 1e-10 * va.value);
        prop_assert!((v.ratio.unwrap() - va.ratio.unwrap()).abs() <= 1e-10 * v.ratio.unwrap());
    }

    #[test]
    fn resolvent_of_identity_is_scalar(r in 0.05f64..20.0, t in -1.5f64..1.5, dim in 1usize..6) {
        let l = off_sector(r, t);
        let got = resolvent(&OperatorMatrix::new(identity(dim)).unwrap(), l).unwrap();
        let want = identity(dim) * (1.0 / (l - 1.0));
        prop_assert!(rel_err(&got, &want) < 1e-13);
        prop_assert!(apply(&got, &vec![c(1.0, 0.0); dim]).iter().all(|z| (z - 1.0 / (l - 1.0)).norm() < 1e-13));
    }
}
