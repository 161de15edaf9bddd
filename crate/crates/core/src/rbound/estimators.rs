use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pair, BoundKind, OperatorFamily, SignConfig, Signs};
use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::json::{vector_from_json, vector_json};
use crate::linalg::{CMat, C64, ZERO};
use crate::norms::NormSpec;
use crate::opnorm::LinearOp;
use crate::search::{block_ascent, gaussian_vector, stream, subsets, BlockRef, Blocks, SearchConfig};

/// One operator selection `T_1..T_n` with its objective.
pub(crate) struct Problem<'a> {
    kind: BoundKind,
    ops: Vec<&'a CMat>,
    norm: &'a NormSpec,
    dual: NormSpec,
    signs: Signs,
    tops: Vec<Vec<C64>>,
}

impl<'a> Problem<'a> {
    fn new(kind: BoundKind, ops: Vec<&'a CMat>, norm: &'a NormSpec, sign: &SignConfig) -> Self {
        let tops = ops.iter().map(|m| norm.operator_norm_with_vector(m).1).collect();
        Problem { kind, signs: Signs::new(ops.len(), sign), dual: norm.dual(), ops, norm, tops }
    }

    fn images(&self, xs: &[Vec<C64>]) -> Vec<Vec<C64>> {
        self.ops.iter().zip(xs).map(|(t, x)| t.apply(x)).collect()
    }

    pub(crate) fn value(&self, b: &Blocks) -> f64 {
        match self.kind {
            BoundKind::R => {
                let den = self.signs.mean(&b.primal, self.norm).value;
                if den <= 0.0 {
                    return 0.0;
                }
                self.signs.mean(&self.images(&b.primal), self.norm).value / den
            }
            BoundKind::Wr | BoundKind::U => {
                let num: f64 = self.images(&b.primal).iter().zip(&b.dual).map(|(tx, xs)| pair(tx, xs).norm()).sum();
                if num == 0.0 {
                    return 0.0;
                }
                let den = if self.kind == BoundKind::Wr {
                    self.signs.mean(&b.primal, self.norm).value * self.signs.mean(&b.dual, &self.dual).value
                } else {
                    self.signs.max(&b.primal, self.norm) * self.signs.max(&b.dual, &self.dual)
                };
                if den <= 0.0 {
                    0.0
                } else {
                    num / den
                }
            }
        }
    }

    fn hints(&self, b: &Blocks, r: BlockRef) -> Vec<Vec<C64>> {
        match r {
            BlockRef::Primal(j) => {
                let t = self.ops[j];
                let mut h = vec![self.tops[j].clone()];
                if self.kind == BoundKind::R {
                    // One power step of T_j from the current block.
                    let y = t.apply(&b.primal[j]);
                    h.push(self.dual.norming_functional(&t.apply_transpose(&self.norm.norming_functional(&y))));
                } else {
                    h.push(self.dual.norming_functional(&t.apply_transpose(&b.dual[j])));
                }
                h
            }
            BlockRef::Dual(j) => vec![self.norm.norming_functional(&self.ops[j].apply(&b.primal[j]))],
            BlockRef::Phase(_) => Vec::new(),
        }
    }

    fn has_dual(&self) -> bool {
        self.kind != BoundKind::R
    }

    /// Blocks with only member `k` active, at its norming vector.
    fn single_member(&self, k: usize) -> Blocks {
        let d = self.tops[k].len();
        let mut primal = vec![vec![ZERO; d]; self.ops.len()];
        primal[k] = self.tops[k].clone();
        let mut dual = Vec::new();
        if self.has_dual() {
            dual = vec![vec![ZERO; d]; self.ops.len()];
            dual[k] = self.norm.norming_functional(&self.ops[k].apply(&primal[k]));
        }
        Blocks { primal, dual, phases: Vec::new() }
    }

    fn random_start(&self, seed: u64, index: u64) -> Blocks {
        let mut rng = stream(seed, index);
        let d = self.tops[0].len();
        let unit = |v: Vec<C64>, n: &NormSpec| {
            let s = n.norm(&v).max(f64::MIN_POSITIVE);
            v.into_iter().map(|z| z / s).collect::<Vec<_>>()
        };
        let primal = (0..self.ops.len()).map(|_| unit(gaussian_vector(&mut rng, d), self.norm)).collect();
        let dual = if self.has_dual() {
            (0..self.ops.len()).map(|_| unit(gaussian_vector(&mut rng, d), &self.dual)).collect()
        } else {
            Vec::new()
        };
        Blocks { primal, dual, phases: Vec::new() }
    }

    /// Adapts a state found for another bound kind: duals are dropped for R,
    /// and filled with norming functionals of `T_k x_k` when missing.
    fn adapt(&self, mut b: Blocks) -> Option<Blocks> {
        if b.primal.len() != self.ops.len() {
            return None;
        }
        if !self.has_dual() {
            b.dual.clear();
        } else if b.dual.len() != self.ops.len() {
            b.dual = self.ops.iter().zip(&b.primal).map(|(t, x)| self.norm.norming_functional(&t.apply(x))).collect();
        }
        Some(b)
    }
}

pub(crate) struct SearchOutcome {
    pub value: f64,
    pub blocks: Blocks,
    pub evaluations: usize,
}

/// Multi-start block ascent; starts are independent seeded streams and the
/// merged result is the first best one in start order.
fn search_selection(problem: &Problem, search: &SearchConfig, seed: u64, extra: Vec<Blocks>) -> SearchOutcome {
    let mut initial: Vec<Blocks> = (0..problem.ops.len()).map(|k| problem.single_member(k)).collect();
    initial.extend(extra.into_iter().filter_map(|b| problem.adapt(b)));
    let seeded = initial.len();
    let total = seeded + search.starts;
    let runs: Vec<(f64, Blocks, usize)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let start = if i < seeded { initial[i].clone() } else { problem.random_start(seed, i as u64) };
            let mut rng = stream(seed ^ 0xa5c3, i as u64);
            block_ascent(&mut rng, start, search.steps, &|b| problem.value(b), &|b, r| problem.hints(b, r))
        })
        .collect();
    let evaluations = runs.iter().map(|r| r.2).sum();
    let (value, blocks, _) = runs
        .into_iter()
        .fold(None::<(f64, Blocks, usize)>, |acc, r| match acc {
            Some(a) if a.0 >= r.0 => Some(a),
            _ => Some(r),
        })
        .expect("at least one start");
    SearchOutcome { value, blocks, evaluations }
}

/// FNV-1a over the bit patterns of the selected matrices.
pub(crate) fn content_hash(mats: &[&CMat]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for m in mats {
        for z in m.iter() {
            for w in [z.re.to_bits(), z.im.to_bits()] {
                for byte in w.to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
    }
    h
}

/// Indices of pairwise distinct members (first occurrences).
fn distinct_members(family: &OperatorFamily) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, m) in family.members.iter().enumerate() {
        if !out.iter().any(|&j| family.members[j].matrix() == m.matrix()) {
            out.push(i);
        }
    }
    out
}

fn witness_blocks(w: &Witness) -> Option<(Vec<usize>, Blocks)> {
    match w {
        Witness::Vectors { selection, x, xstar } => Some((
            selection.clone(),
            Blocks {
                primal: x.iter().map(|v| vector_from_json(v).iter().copied().collect()).collect(),
                dual: xstar.iter().map(|v| vector_from_json(v).iter().copied().collect()).collect(),
                phases: Vec::new(),
            },
        )),
        _ => None,
    }
}

fn estimate(
    kind: BoundKind,
    family: &OperatorFamily,
    n: usize,
    sign: &SignConfig,
    search: &SearchConfig,
    seeds: &[&Witness],
) -> Result<BoundEstimate> {
    family.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("selection length must be at least 1".into()));
    }
    let uniq = distinct_members(family);
    let k = n.min(uniq.len());
    let norm = &family.norm;
    let seeded: Vec<(Vec<usize>, Blocks)> = seeds
        .iter()
        .filter_map(|w| witness_blocks(w))
        .filter(|(s, _)| s.len() == k && s.iter().all(|i| *i < family.len()))
        .collect();
    let problem_for = |sel: &[usize]| {
        let ops: Vec<&CMat> = sel.iter().map(|&i| family.members[i].matrix()).collect();
        let seed = search.seed ^ content_hash(&ops);
        (Problem::new(kind, ops, norm, sign), seed)
    };
    let extras = |sel: &[usize]| -> Vec<Blocks> {
        seeded.iter().filter(|(s, _)| s.as_slice() == sel).map(|(_, b)| b.clone()).collect()
    };

    let enumerated = subsets(uniq.len(), k, search.max_selections.max(1));
    let mut notes = Vec::new();
    let mut evaluations = 0;
    let best: (Vec<usize>, SearchOutcome) = match enumerated {
        Some(sets) => {
            notes.push(format!("selections enumerated: {}", sets.len()));
            let sels: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().map(|&i| uniq[i]).collect()).collect();
            let outcomes: Vec<SearchOutcome> = sels
                .par_iter()
                .map(|sel| {
                    let (p, seed) = problem_for(sel);
                    search_selection(&p, search, seed, extras(sel))
                })
                .collect();
            evaluations += outcomes.iter().map(|o| o.evaluations).sum::<usize>();
            sels.into_iter()
                .zip(outcomes)
                .fold(None::<(Vec<usize>, SearchOutcome)>, |acc, r| match acc {
                    Some(a) if a.1.value >= r.1.value => Some(a),
                    _ => Some(r),
                })
                .expect("nonempty selection list")
        }
        None => {
            // Too many selections: screen the largest-norm members, the
            // seeded selections and random subsets cheaply, then search the
            // best screened selection with the full budget.
            let mut ranked: Vec<(usize, f64)> =
                uniq.iter().map(|&i| (i, norm.operator_norm(family.members[i].matrix()))).collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut top: Vec<usize> = ranked.iter().take(k).map(|r| r.0).collect();
            top.sort_unstable();
            let mut sels = vec![top];
            for (s, _) in &seeded {
                let mut s = s.clone();
                s.sort_unstable();
                sels.push(s);
            }
            let mut rng = stream(search.seed, 0x5e1);
            for _ in 1..search.max_selections.max(1) {
                let mut s: Vec<usize> = sample(&mut rng, uniq.len(), k).into_iter().map(|i| uniq[i]).collect();
                s.sort_unstable();
                sels.push(s);
            }
            sels.dedup();
            let screen = SearchConfig { starts: (search.starts / 8).max(2), steps: (search.steps / 4).max(10), ..*search };
            let scores: Vec<(f64, usize)> = sels
                .par_iter()
                .map(|sel| {
                    let (p, seed) = problem_for(sel);
                    let o = search_selection(&p, &screen, seed, extras(sel));
                    (o.value, o.evaluations)
                })
                .collect();
            evaluations += scores.iter().map(|s| s.1).sum::<usize>();
            let ib = (0..sels.len()).fold(0, |b, i| if scores[i].0 > scores[b].0 { i } else { b });
            notes.push(format!("selections screened: {} of {} members", sels.len(), uniq.len()));
            let sel = sels.swap_remove(ib);
            let (p, seed) = problem_for(&sel);
            let o = search_selection(&p, search, seed, extras(&sel));
            (sel, o)
        }
    };
    let (selection, outcome) = best;
    evaluations += outcome.evaluations;
    let (p, _) = problem_for(&selection);
    let value = p.value(&outcome.blocks);
    let signs_exhaustive = p.signs.is_exhaustive();
    let mut method = MethodInfo::new(if signs_exhaustive { "exhaustive" } else { "randomized" });
    method.samples = if signs_exhaustive { 1 << (k - 1) } else { sign.samples };
    method.seed = Some(search.seed);
    method.starts = search.starts;
    method.evaluations = evaluations;
    method.notes = notes;
    method.notes.push(format!("{} bound over selections of {k} distinct members", kind.name()));
    let witness = Witness::Vectors {
        selection,
        x: outcome.blocks.primal.iter().map(|v| vector_json(v)).collect(),
        xstar: outcome.blocks.dual.iter().map(|v| vector_json(v)).collect(),
    };
    Ok(BoundEstimate::new(value, witness, method, true))
}

/// R-boundedness constant: `sup (E||Σ ε_k T_k x_k||²)^{1/2} / (E||Σ ε_k x_k||²)^{1/2}`
/// over selections of `n` distinct members.
pub fn r_bound(family: &OperatorFamily, n: usize, sign: &SignConfig, search: &SearchConfig) -> Result<BoundEstimate> {
    estimate(BoundKind::R, family, n, sign, search, &[])
}

/// WR-boundedness constant with dual vectors searched in the dual norm.
pub fn wr_bound(family: &OperatorFamily, n: usize, sign: &SignConfig, search: &SearchConfig) -> Result<BoundEstimate> {
    estimate(BoundKind::Wr, family, n, sign, search, &[])
}

/// U-boundedness constant: maxima over signs in both denominators.
pub fn u_bound(family: &OperatorFamily, n: usize, sign: &SignConfig, search: &SearchConfig) -> Result<BoundEstimate> {
    estimate(BoundKind::U, family, n, sign, search, &[])
}

pub(crate) fn estimate_kind(
    kind: BoundKind,
    family: &OperatorFamily,
    n: usize,
    sign: &SignConfig,
    search: &SearchConfig,
) -> Result<BoundEstimate> {
    estimate(kind, family, n, sign, search, &[])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedBounds {
    pub u: BoundEstimate,
    pub wr: BoundEstimate,
    pub r: BoundEstimate,
}

/// All three constants with each search also started from the witness of
/// the weaker notion: a U witness is feasible for WR (max over signs
/// dominates the mean) and a WR witness supplies vectors for R.
pub fn bounds_ordered(family: &OperatorFamily, n: usize, sign: &SignConfig, search: &SearchConfig) -> Result<OrderedBounds> {
    let u = estimate(BoundKind::U, family, n, sign, search, &[])?;
    let wr = estimate(BoundKind::Wr, family, n, sign, search, &[&u.witness])?;
    let r = estimate(BoundKind::R, family, n, sign, search, &[&wr.witness])?;
    Ok(OrderedBounds { u, wr, r })
}

/// Re-evaluates a `Vectors` witness without searching.
pub fn evaluate_witness(kind: BoundKind, family: &OperatorFamily, witness: &Witness, sign: &SignConfig) -> Result<f64> {
    let (selection, blocks) =
        witness_blocks(witness).ok_or_else(|| Error::InvalidInput("witness does not carry vectors".into()))?;
    if selection.iter().any(|&i| i >= family.len()) || blocks.primal.len() != selection.len() {
        return Err(Error::InvalidInput("witness does not match the family".into()));
    }
    let ops: Vec<&CMat> = selection.iter().map(|&i| family.members[i].matrix()).collect();
    let p = Problem::new(kind, ops, &family.norm, sign);
    let blocks = p.adapt(blocks).ok_or_else(|| Error::InvalidInput("witness shape".into()))?;
    Ok(p.value(&blocks))
}
