use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pair, SignConfig};
use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::json::vector_json;
use crate::linalg::{C64, ONE, ZERO};
use crate::norms::NormSpec;
use crate::search::{block_ascent, for_each_sign_pattern, gaussian_vector, random_phase, random_sign, stream, BlockRef, Blocks, SearchConfig};

/// Double Rademacher sums are averaged exhaustively up to this `n`.
pub const PROPERTY_EXHAUSTIVE_N: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyConstants {
    pub alpha: BoundEstimate,
    #[serde(rename = "A")]
    pub a: BoundEstimate,
    pub delta: BoundEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Property {
    Alpha,
    A,
    Delta,
}

/// Coefficient patterns `ε_j η_k` (row-major `j * n + k`).
struct DoubleSigns {
    patterns: Vec<Vec<f64>>,
    exhaustive: bool,
}

impl DoubleSigns {
    fn new(n: usize, sign: &SignConfig) -> Self {
        let to_coeffs = |e: &[f64], h: &[f64]| -> Vec<f64> {
            (0..n * n).map(|i| e[i / n] * h[i % n]).collect()
        };
        if n <= PROPERTY_EXHAUSTIVE_N {
            // (ε, η) and (-ε, -η) give the same coefficients, so ε_1 = +1.
            let mut patterns = Vec::with_capacity(1 << (2 * n - 1));
            for_each_sign_pattern(2 * n - 1, |s, _| {
                let mut e = vec![1.0];
                e.extend_from_slice(&s[..n - 1]);
                patterns.push(to_coeffs(&e, &s[n - 1..]));
            });
            DoubleSigns { patterns, exhaustive: true }
        } else {
            let mut rng = stream(sign.seed, 0xd0b1);
            let patterns = (0..sign.samples.max(1))
                .map(|_| {
                    let e: Vec<f64> = (0..n).map(|_| random_sign(&mut rng)).collect();
                    let h: Vec<f64> = (0..n).map(|_| random_sign(&mut rng)).collect();
                    to_coeffs(&e, &h)
                })
                .collect();
            DoubleSigns { patterns, exhaustive: false }
        }
    }

    /// `(E||Σ ε_j η_k w_{jk} x_{jk}||²)^{1/2}`, with `w` defaulting to 1.
    fn mean(&self, xs: &[Vec<C64>], weights: Option<&[C64]>, norm: &NormSpec) -> f64 {
        let d = xs[0].len();
        let mut acc = 0.0;
        let mut sum = vec![ZERO; d];
        for p in &self.patterns {
            sum.iter_mut().for_each(|s| *s = ZERO);
            for (i, x) in xs.iter().enumerate() {
                let w = weights.map_or(ONE, |w| w[i]) * p[i];
                if w != ZERO {
                    sum.iter_mut().zip(x).for_each(|(s, v)| *s += v * w);
                }
            }
            let v = norm.norm(&sum);
            acc += v * v;
        }
        (acc / self.patterns.len() as f64).sqrt()
    }
}

struct Problem<'a> {
    prop: Property,
    n: usize,
    norm: &'a NormSpec,
    dual: NormSpec,
    signs: DoubleSigns,
    /// Lower-triangular mask `k ≤ j` for (Δ).
    tri: Vec<C64>,
}

impl Problem<'_> {
    fn value(&self, b: &Blocks) -> f64 {
        let den = self.signs.mean(&b.primal, None, self.norm);
        if den <= 0.0 {
            return 0.0;
        }
        match self.prop {
            Property::Alpha => self.signs.mean(&b.primal, Some(&b.phases), self.norm) / den,
            Property::Delta => self.signs.mean(&b.primal, Some(&self.tri), self.norm) / den,
            Property::A => {
                let num: f64 = b.primal.iter().zip(&b.dual).map(|(x, y)| pair(x, y).norm()).sum();
                let dd = self.signs.mean(&b.dual, None, &self.dual);
                if dd <= 0.0 {
                    0.0
                } else {
                    num / (den * dd)
                }
            }
        }
    }

    fn hints(&self, b: &Blocks, r: BlockRef) -> Vec<Vec<C64>> {
        match (self.prop, r) {
            (Property::A, BlockRef::Primal(i)) => vec![self.dual.norming_functional(&b.dual[i])],
            (Property::A, BlockRef::Dual(i)) => vec![self.norm.norming_functional(&b.primal[i])],
            // Basis vectors: the extreme points that matter for ℓ1-type norms.
            (_, BlockRef::Primal(i)) => {
                let d = b.primal[i].len();
                (0..d)
                    .map(|l| {
                        let mut e = vec![ZERO; d];
                        e[l] = ONE;
                        e
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    fn diagonal_start(&self, d: usize) -> Blocks {
        let n = self.n;
        let mut primal = vec![vec![ZERO; d]; n * n];
        for j in 0..n {
            primal[j * n + j][j % d] = ONE;
        }
        let dual = if self.prop == Property::A {
            primal.iter().map(|x| if x.iter().any(|z| *z != ZERO) { self.norm.norming_functional(x) } else { x.clone() }).collect()
        } else {
            Vec::new()
        };
        let phases = if self.prop == Property::Alpha { vec![ONE; n * n] } else { Vec::new() };
        Blocks { primal, dual, phases }
    }

    fn random_start(&self, d: usize, seed: u64, index: u64) -> Blocks {
        let mut rng = stream(seed, index);
        let m = self.n * self.n;
        // Odd starts are sparse: each x_{jk} is zero or a signed basis vector.
        let primal = (0..m)
            .map(|_| {
                if index % 2 == 1 {
                    let mut v = vec![ZERO; d];
                    let l = rng.random_range(0..=d);
                    if l < d {
                        v[l] = C64::new(random_sign(&mut rng), 0.0);
                    }
                    v
                } else {
                    gaussian_vector(&mut rng, d)
                }
            })
            .collect();
        let dual = if self.prop == Property::A { (0..m).map(|_| gaussian_vector(&mut rng, d)).collect() } else { Vec::new() };
        let phases = if self.prop == Property::Alpha { (0..m).map(|_| random_phase(&mut rng)).collect() } else { Vec::new() };
        Blocks { primal, dual, phases }
    }
}

fn estimate_property(prop: Property, norm: &NormSpec, d: usize, n: usize, sign: &SignConfig, search: &SearchConfig) -> BoundEstimate {
    let tri = (0..n * n).map(|i| if i % n <= i / n { ONE } else { ZERO }).collect();
    let p = Problem { prop, n, norm, dual: norm.dual(), signs: DoubleSigns::new(n, sign), tri };
    let total = search.starts + 1;
    let runs: Vec<(f64, Blocks, usize)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let start = if i == 0 { p.diagonal_start(d) } else { p.random_start(d, search.seed, i as u64) };
            let mut rng = stream(search.seed ^ 0x9e37, i as u64);
            block_ascent(&mut rng, start, search.steps, &|b| p.value(b), &|b, r| p.hints(b, r))
        })
        .collect();
    let evaluations = runs.iter().map(|r| r.2).sum();
    let (_, blocks, _) = runs
        .into_iter()
        .fold(None::<(f64, Blocks, usize)>, |acc, r| match acc {
            Some(a) if a.0 >= r.0 => Some(a),
            _ => Some(r),
        })
        .expect("at least one start");
    let value = p.value(&blocks);
    let mut method = MethodInfo::new(if p.signs.exhaustive { "exhaustive" } else { "randomized" });
    method.samples = p.signs.patterns.len();
    method.seed = Some(search.seed);
    method.starts = total;
    method.evaluations = evaluations;
    let witness = Witness::Grid {
        n,
        x: blocks.primal.iter().map(|v| vector_json(v)).collect(),
        xstar: blocks.dual.iter().map(|v| vector_json(v)).collect(),
        alpha: vector_json(&blocks.phases),
    };
    BoundEstimate::new(value, witness, method, true)
}

/// Finite-`n` constants of properties (α), (A) and (Δ) of `(C^d, norm)`.
/// Scalars in (α) range over the unit circle, where the convex left side
/// attains its maximum over the polydisc; (Δ) keeps the terms with `k ≤ j`.
pub fn property_constants(norm: &NormSpec, d: usize, n: usize, sign: &SignConfig, search: &SearchConfig) -> Result<PropertyConstants> {
    norm.validate()?;
    norm.check_dim(d)?;
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("property constants need n ≥ 1 and d ≥ 1".into()));
    }
    Ok(PropertyConstants {
        alpha: estimate_property(Property::Alpha, norm, d, n, sign, search),
        a: estimate_property(Property::A, norm, d, n, sign, search),
        delta: estimate_property(Property::Delta, norm, d, n, sign, search),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SearchConfig {
        SearchConfig { starts: 6, steps: 60, seed: 3, max_selections: 8 }
    }

    #[test]
    fn single_term_constants_are_one() {
        for norm in [NormSpec::lp(1.0), NormSpec::lp(3.0), NormSpec::l2()] {
            let pc = property_constants(&norm, 3, 1, &SignConfig::default(), &quick()).unwrap();
            for e in [&pc.alpha, &pc.a, &pc.delta] {
                assert!((e.value - 1.0).abs() < 1e-9, "{norm:?} {}", e.value);
            }
        }
    }

    #[test]
    fn hilbert_constants_are_one() {
        let pc = property_constants(&NormSpec::l2(), 3, 2, &SignConfig::default(), &quick()).unwrap();
        for e in [&pc.alpha, &pc.a, &pc.delta] {
            assert!((e.value - 1.0).abs() < 1e-6, "{}", e.value);
        }
    }

    #[test]
    fn delta_on_l1_matches_brute_force() {
        // ℓ1(4), n = 2: real grid search over x_{jk} ∈ {e_i, ±e_i ± e_l}/norm.
        let norm = NormSpec::lp(1.0);
        let est = property_constants(&norm, 4, 2, &SignConfig::default(), &SearchConfig { starts: 16, steps: 150, ..quick() })
            .unwrap()
            .delta;
        let p = Problem { prop: Property::Delta, n: 2, norm: &norm, dual: norm.dual(), signs: DoubleSigns::new(2, &SignConfig::default()), tri: vec![ONE, ZERO, ONE, ONE] };
        let mut cands: Vec<Vec<C64>> = Vec::new();
        for i in 0..4 {
            let mut v = vec![ZERO; 4];
            v[i] = ONE;
            cands.push(v);
        }
        cands.push(vec![ZERO; 4]);
        let mut brute = 0.0f64;
        for a in &cands {
            for b in &cands {
                for cc in &cands {
                    for e in &cands {
                        for s in [1.0, -1.0] {
                            let bl = Blocks {
                                primal: vec![a.clone(), b.iter().map(|z| z * s).collect(), cc.clone(), e.clone()],
                                dual: vec![],
                                phases: vec![],
                            };
                            brute = brute.max(p.value(&bl));
                        }
                    }
                }
            }
        }
        assert!(est.value >= brute - 1e-12, "{} < {brute}", est.value);
        assert!(est.value >= 1.0 && est.value.is_finite());
    }
}
