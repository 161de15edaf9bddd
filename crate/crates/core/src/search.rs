//! Deterministic random streams and small enumeration helpers shared by the
//! maximization estimators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, C64};

/// Independent stream for start `index` under `seed`; the result of a
/// multi-start search never depends on which thread ran which start.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard complex Gaussian vector.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    (0..d)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

pub fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Visits all `2^n` sign patterns in Gray-code order, so consecutive patterns
/// differ in one coordinate. The callback receives the signs and the index of
/// the coordinate just flipped (`None` for the first pattern).
pub fn for_each_sign_pattern(n: usize, mut visit: impl FnMut(&[f64], Option<usize>)) {
    let mut signs = vec![1.0; n];
    visit(&signs, None);
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        signs[k] = -signs[k];
        visit(&signs, Some(k));
    }
}

/// All `k`-subsets of `0..n` in lexicographic order, or `None` when there are
/// more than `limit` of them.
pub fn subsets(n: usize, k: usize, limit: usize) -> Option<Vec<Vec<usize>>> {
    if k > n {
        return Some(Vec::new());
    }
    let mut count: u128 = 1;
    for i in 0..k {
        count = count * (n - i) as u128 / (i + 1) as u128;
        if count > limit as u128 {
            return None;
        }
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return Some(out);
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
            if i == 0 && cur[0] >= n - k {
                return Some(out);
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Multi-start budget of the vector searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub starts: usize,
    /// Sweeps over all blocks per start.
    pub steps: usize,
    pub seed: u64,
    /// Member selections are enumerated up to this count and searched by
    /// swaps beyond it.
    pub max_selections: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { starts: 64, steps: 200, seed: 42, max_selections: 32 }
    }
}

/// Search state: vector blocks, dual-vector blocks and unimodular scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub primal: Vec<Vec<C64>>,
    pub dual: Vec<Vec<C64>>,
    pub phases: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRef {
    Primal(usize),
    Dual(usize),
    Phase(usize),
}

fn block_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn mean_norm(blocks: &[Vec<C64>]) -> f64 {
    let n: Vec<f64> = blocks.iter().map(|b| block_norm(b)).filter(|&x| x > 0.0).collect();
    if n.is_empty() {
        1.0
    } else {
        n.iter().sum::<f64>() / n.len() as f64
    }
}

/// Block coordinate ascent. Each sweep visits every block and tries, in
/// order: scaling by 0, 1/2, 2 and -1, the caller's hint vectors (rescaled to the
/// block's size), and a Gaussian perturbation with a per-block adaptive step.
/// A proposal is kept only if it strictly increases the objective.
pub fn block_ascent<R: Rng + ?Sized>(
    rng: &mut R,
    mut state: Blocks,
    steps: usize,
    objective: &dyn Fn(&Blocks) -> f64,
    hints: &dyn Fn(&Blocks, BlockRef) -> Vec<Vec<C64>>,
) -> (f64, Blocks, usize) {
    let mut value = objective(&state);
    let mut evals = 1;
    let refs: Vec<BlockRef> = (0..state.primal.len())
        .map(BlockRef::Primal)
        .chain((0..state.dual.len()).map(BlockRef::Dual))
        .chain((0..state.phases.len()).map(BlockRef::Phase))
        .collect();
    let mut step = vec![0.5; refs.len()];
    let mut history = Vec::with_capacity(steps);
    for sweep in 0..steps {
        let mut improved = false;
        for (bi, &r) in refs.iter().enumerate() {
            let mut proposals: Vec<Blocks> = Vec::new();
            match r {
                BlockRef::Primal(j) | BlockRef::Dual(j) => {
                    let (blocks, is_primal) = match r {
                        BlockRef::Primal(_) => (&state.primal, true),
                        _ => (&state.dual, false),
                    };
                    let cur = &blocks[j];
                    let size = match block_norm(cur) {
                        x if x > 0.0 => x,
                        _ => mean_norm(blocks),
                    };
                    let mut cands: Vec<Vec<C64>> = [0.0, 0.5, 2.0, -1.0]
                        .iter()
                        .filter(|_| block_norm(cur) > 0.0)
                        .map(|&f| cur.iter().map(|z| z * f).collect())
                        .collect();
                    for h in hints(&state, r) {
                        let hn = block_norm(&h);
                        if hn > 0.0 {
                            cands.push(h.iter().map(|z| z * (size / hn)).collect());
                        }
                    }
                    let g = gaussian_vector(rng, cur.len());
                    let gn = block_norm(&g).max(f64::MIN_POSITIVE);
                    cands.push(cur.iter().zip(&g).map(|(z, e)| z + e * (step[bi] * size / gn)).collect());
                    for c in cands {
                        let mut next = state.clone();
                        if is_primal {
                            next.primal[j] = c;
                        } else {
                            next.dual[j] = c;
                        }
                        proposals.push(next);
                    }
                }
                BlockRef::Phase(j) => {
                    let delta: f64 = rng.sample::<f64, _>(StandardNormal) * step[bi];
                    for p in [C64::from_polar(1.0, delta) * state.phases[j], -state.phases[j]] {
                        let mut next = state.clone();
                        next.phases[j] = p;
                        proposals.push(next);
                    }
                }
            }
            let last = proposals.len() - 1;
            for (pi, p) in proposals.into_iter().enumerate() {
                let v = objective(&p);
                evals += 1;
                if v > value * (1.0 + 1e-12) {
                    value = v;
                    state = p;
                    improved = true;
                    if pi == last {
                        step[bi] = (step[bi] * 1.5).min(2.0);
                    }
                } else if pi == last {
                    step[bi] = (step[bi] * 0.7).max(1e-4);
                }
            }
        }
        history.push(value);
        if !improved && step.iter().all(|&s| s <= 1e-3) {
            break;
        }
        // Plateau: less than 1e-9 relative gain over the last 12 sweeps.
        if sweep >= 12 && value <= history[sweep - 12] * (1.0 + 1e-9) {
            break;
        }
    }
    (value, state, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_code_visits_every_pattern_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_sign_pattern(5, |s, _| {
            let key: Vec<bool> = s.iter().map(|&x| x > 0.0).collect();
            assert!(seen.insert(key));
        });
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn subsets_counts() {
        assert_eq!(subsets(5, 2, 100).unwrap().len(), 10);
        assert_eq!(subsets(4, 4, 100).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert_eq!(subsets(3, 1, 100).unwrap().len(), 3);
        assert!(subsets(40, 20, 1000).is_none());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<C64> = gaussian_vector(&mut stream(42, 0), 3);
        let b: Vec<C64> = gaussian_vector(&mut stream(42, 0), 3);
        let d: Vec<C64> = gaussian_vector(&mut stream(42, 1), 3);
        assert_eq!(a, b);
        assert_ne!(a, d);
    }
}
