use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::functions::{blaschke, ScalarFunction};
use crate::json::Cplx;
use crate::linalg::{pairwise_sum, CMat, C64};
use crate::norms::NormSpec;
use crate::operators::{spectral_angle, FractionalExponent, OperatorMatrix, Sector};
use crate::search::stream;

use super::scalar::AltdefNodes;

/// Randomized probe family for the H∞ constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestFamily {
    /// Random Blaschke products `B ∘ w_σ`.
    pub samples: usize,
    pub max_degree: usize,
    pub max_zero_modulus: f64,
    /// Rational H∞₀ samples `z / ((z + p₁)(z + p₂))`, normalized by their
    /// sampled sup.
    pub rational_samples: usize,
    /// Local perturbation steps around the best Blaschke product.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for TestFamily {
    fn default() -> Self {
        TestFamily { samples: 256, max_degree: 12, max_zero_modulus: 0.95, rational_samples: 32, refine_steps: 200, seed: 42 }
    }
}

#[derive(Debug, Clone)]
struct Probe {
    zeros: Vec<C64>,
    rotation: f64,
}

fn random_probe<R: Rng>(rng: &mut R, family: &TestFamily) -> Probe {
    let degree = rng.random_range(0..=family.max_degree);
    let zeros = (0..degree)
        .map(|_| {
            let r = family.max_zero_modulus * rng.random::<f64>().sqrt();
            C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    Probe { zeros, rotation: rng.random_range(0.0..std::f64::consts::TAU) }
}

fn perturb<R: Rng>(rng: &mut R, p: &Probe, step: f64, max_modulus: f64) -> Probe {
    let zeros = p
        .zeros
        .iter()
        .map(|z| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let w = z + C64::new(re, im) * step;
            if w.norm() > max_modulus {
                w * (max_modulus / w.norm())
            } else {
                w
            }
        })
        .collect();
    let dr: f64 = rng.sample(StandardNormal);
    Probe { zeros, rotation: p.rotation + step * dr }
}

/// Sup of `|f|` on the two boundary rays of `Σ_σ` over `r ∈ [1e-8, 1e8]`.
fn boundary_sup(f: &ScalarFunction, sigma: f64) -> f64 {
    (0..=1600)
        .flat_map(|i| {
            let r = 10f64.powf(-8.0 + 0.01 * i as f64);
            [C64::from_polar(r, sigma), C64::from_polar(r, -sigma)]
        })
        .map(|z| f.eval(z).norm())
        .fold(0.0, f64::max)
}

/// Best `C` with `||f(A)|| <= C ||f||_{H∞(Σ_σ)}` over the probe family.
/// `f(A)` comes from the operator-valued representation with `F = f I`,
/// whose contour data are computed once and shared by every probe.
pub fn hinfty_constant(a: &OperatorMatrix, sigma: Sector, family: &TestFamily, norm: &NormSpec) -> Result<BoundEstimate> {
    norm.validate()?;
    norm.check_dim(a.dim())?;
    let omega = spectral_angle(a)?;
    if sigma.angle <= omega {
        return Err(Error::NotSectorial(format!("sector angle {} does not exceed spectral angle {omega}", sigma.angle)));
    }
    let s = FractionalExponent::new(0.5)?;
    let prepared = AltdefNodes::new(a, sigma.angle, 1.0, s, None)?;
    let kernels: Vec<CMat> = prepared.nodes.par_iter().map(|n| prepared.kernel(n)).collect::<Result<_>>()?;
    let d = a.dim();
    let apply = |f: &ScalarFunction| -> CMat {
        let terms: Vec<CMat> = prepared.nodes.iter().zip(&kernels).map(|(n, k)| k * f.eval(n.zeta)).collect();
        pairwise_sum(&terms, d, d)
    };
    let sg = sigma.angle;
    let score = |p: &Probe| -> f64 { norm.operator_norm(&apply(&blaschke(&p.zeros, p.rotation, sg))) };

    let mut probes = vec![Probe { zeros: Vec::new(), rotation: 0.0 }];
    probes.extend((0..family.samples).map(|i| random_probe(&mut stream(family.seed, i as u64), family)));
    let scores: Vec<f64> = probes.par_iter().map(score).collect();
    let mut best_i = 0;
    for (i, v) in scores.iter().enumerate() {
        if *v > scores[best_i] {
            best_i = i;
        }
    }
    let mut best = (scores[best_i], probes[best_i].clone());
    let mut evaluations = probes.len();

    let mut rng = stream(family.seed, u64::MAX);
    let mut step = 0.1;
    for _ in 0..family.refine_steps {
        let cand = perturb(&mut rng, &best.1, step, family.max_zero_modulus);
        let v = score(&cand);
        evaluations += 1;
        if v > best.0 {
            best = (v, cand);
            step = (step * 1.5).min(0.5);
        } else {
            step = (step * 0.8).max(1e-4);
        }
    }

    let rationals: Vec<(f64, [C64; 2])> = (0..family.rational_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(family.seed ^ 0x5241_5449_4f4e_414c, i as u64);
            let reach = (std::f64::consts::PI - sg - 0.05).max(0.0);
            let p: [C64; 2] = std::array::from_fn(|_| {
                let r = 10f64.powf(rng.random_range(-1.0..1.0)) * a.norm2().sqrt() / a.inverse_norm2().sqrt();
                C64::from_polar(r, rng.random_range(-reach..=reach))
            });
            let f = ScalarFunction::new("rational", sg, move |z| z / ((z + p[0]) * (z + p[1])));
            let sup = boundary_sup(&f, sg);
            (norm.operator_norm(&apply(&f)) / sup, p)
        })
        .collect();
    evaluations += rationals.len();
    let best_rational = rationals.iter().cloned().fold(None::<(f64, [C64; 2])>, |acc, r| match acc {
        Some(b) if b.0 >= r.0 => Some(b),
        _ => Some(r),
    });

    let mut method = MethodInfo::new("randomized");
    method.seed = Some(family.seed);
    method.samples = probes.len() + family.rational_samples;
    method.evaluations = evaluations;
    method = method.note(format!("operator-valued quadrature with {} nodes", prepared.nodes.len()));
    let witness = match best_rational {
        Some((v, p)) if v > best.0 => {
            let params = serde_json::json!({ "poles": [Cplx(-p[0]), Cplx(-p[1])], "sigma": sg });
            return Ok(BoundEstimate::new(
                v,
                Witness::Function { description: "z/((z+p1)(z+p2)) / sampled sup".into(), params },
                method,
                true,
            ));
        }
        _ => {
            let zeros: Vec<Cplx> = best.1.zeros.iter().map(|z| Cplx(*z)).collect();
            let params = serde_json::json!({ "zeros": zeros, "rotation": best.1.rotation, "sigma": sg });
            Witness::Function { description: "blaschke product of the sector-to-disk map".into(), params }
        }
    };
    Ok(BoundEstimate::new(best.0, witness, method, true))
}
