//! R-, WR- and U-boundedness estimators, the Banach-space property constants
//! (α), (A), (Δ), and the angle curves built from them.
//!
//! Every constant here is a supremum over an infinite set. The estimators
//! return maximization lower bounds with a witness that re-evaluates to the
//! reported value.

mod estimators;
mod extensions;
mod properties;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, ZERO};
use crate::norms::NormSpec;
use crate::operators::OperatorMatrix;
use crate::search::{for_each_sign_pattern, random_sign, stream};

pub use estimators::{bounds_ordered, evaluate_witness, r_bound, u_bound, wr_bound, OrderedBounds};
pub use extensions::{
    r_sectorial_angle, r_sectorial_curves, ray_ubound_extension, scalar_operator_function, uncseries_partial_sums,
    unconditional_constant, AngleCurve, AngleCurveConfig,
    AnglePoint, RayExtension, UncSeriesResult,
};
pub use properties::{property_constants, PropertyConstants, PROPERTY_EXHAUSTIVE_N};
pub use crate::search::SearchConfig;

/// A finite family of operators acting on `(C^d, norm)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorFamily {
    pub members: Vec<OperatorMatrix>,
    pub norm: NormSpec,
}

impl OperatorFamily {
    pub fn new(members: Vec<OperatorMatrix>, norm: NormSpec) -> Result<Self> {
        let fam = OperatorFamily { members, norm };
        fam.validate()?;
        Ok(fam)
    }

    pub fn from_matrices(members: Vec<CMat>, norm: NormSpec) -> Result<Self> {
        let members = members.into_iter().map(OperatorMatrix::new).collect::<Result<Vec<_>>>()?;
        Self::new(members, norm)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .members
            .first()
            .ok_or_else(|| Error::InvalidInput("operator family is empty".into()))?;
        let d = first.dim();
        if let Some(bad) = self.members.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch(format!("family mixes dimensions {d} and {}", bad.dim())));
        }
        self.norm.validate()?;
        self.norm.check_dim(d)
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `sup_k ||T_k||` in the family's norm.
    pub fn uniform_bound(&self) -> f64 {
        self.members.iter().map(|m| self.norm.operator_norm(m.matrix())).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    Exhaustive,
    Randomized,
}

/// How expectations and maxima over Rademacher signs are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignConfig {
    pub mode: SignMode,
    /// Largest length averaged exhaustively; longer sums fall back to sampling.
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SignConfig {
    fn default() -> Self {
        SignConfig { mode: SignMode::Exhaustive, n_max: 14, samples: 4096, seed: 42 }
    }
}

impl SignConfig {
    pub fn exhaustive_for(&self, n: usize) -> bool {
        self.mode == SignMode::Exhaustive && n <= self.n_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    R,
    Wr,
    U,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::R => "r",
            BoundKind::Wr => "wr",
            BoundKind::U => "u",
        }
    }
}

/// `(E||Σ ε_k x_k||²)^{1/2}` with its Monte Carlo standard error (zero when
/// exhaustive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherMean {
    pub value: f64,
    pub std_error: f64,
    pub exhaustive: bool,
}

/// Sign patterns shared by every evaluation of one search, so that sampled
/// objectives are deterministic functions of the vectors.
#[derive(Debug, Clone)]
pub(crate) enum Signs {
    /// All patterns with the first sign fixed to +1 (the norm is even).
    Exhaustive(usize),
    /// Row-major `samples × n` sign matrix.
    Sampled { n: usize, patterns: Vec<f64> },
}

impl Signs {
    pub(crate) fn new(n: usize, cfg: &SignConfig) -> Self {
        if cfg.exhaustive_for(n) {
            Signs::Exhaustive(n)
        } else {
            let mut rng = stream(cfg.seed, 0x5a4d);
            let patterns = (0..cfg.samples.max(1) * n).map(|_| random_sign(&mut rng)).collect();
            Signs::Sampled { n, patterns }
        }
    }

    pub(crate) fn is_exhaustive(&self) -> bool {
        matches!(self, Signs::Exhaustive(_))
    }

    fn count(&self) -> usize {
        match self {
            Signs::Exhaustive(n) => 1 << n.saturating_sub(1),
            Signs::Sampled { n, patterns } => patterns.len() / n.max(&1),
        }
    }

    /// Calls `visit(||Σ ε_k x_k||)` once per pattern.
    fn for_each_norm(&self, xs: &[Vec<C64>], norm: &NormSpec, mut visit: impl FnMut(f64)) {
        let d = xs.first().map_or(0, |x| x.len());
        match self {
            Signs::Exhaustive(n) => {
                if *n == 0 {
                    visit(0.0);
                    return;
                }
                let mut sum: Vec<C64> = vec![ZERO; d];
                for x in xs {
                    sum.iter_mut().zip(x).for_each(|(s, v)| *s += v);
                }
                for_each_sign_pattern(n - 1, |signs, flipped| {
                    if let Some(k) = flipped {
                        let f = 2.0 * signs[k];
                        sum.iter_mut().zip(&xs[k + 1]).for_each(|(s, v)| *s += v * f);
                    }
                    visit(norm.norm(&sum));
                });
            }
            Signs::Sampled { n, patterns } => {
                let mut sum: Vec<C64> = vec![ZERO; d];
                for row in patterns.chunks(*n) {
                    sum.iter_mut().for_each(|s| *s = ZERO);
                    for (e, x) in row.iter().zip(xs) {
                        sum.iter_mut().zip(x).for_each(|(s, v)| *s += v * *e);
                    }
                    visit(norm.norm(&sum));
                }
            }
        }
    }

    pub(crate) fn mean(&self, xs: &[Vec<C64>], norm: &NormSpec) -> RademacherMean {
        let (mut s1, mut s2) = (0.0, 0.0);
        self.for_each_norm(xs, norm, |v| {
            let q = v * v;
            s1 += q;
            s2 += q * q;
        });
        let m = self.count() as f64;
        let mean_sq = s1 / m;
        let value = mean_sq.sqrt();
        let std_error = if self.is_exhaustive() || m < 2.0 || value == 0.0 {
            0.0
        } else {
            let var = ((s2 / m - mean_sq * mean_sq) * m / (m - 1.0)).max(0.0);
            (var / m).sqrt() / (2.0 * value)
        };
        RademacherMean { value, std_error, exhaustive: self.is_exhaustive() }
    }

    pub(crate) fn max(&self, xs: &[Vec<C64>], norm: &NormSpec) -> f64 {
        let mut best = 0.0f64;
        self.for_each_norm(xs, norm, |v| best = best.max(v));
        if self.is_exhaustive() {
            return best;
        }
        // Sampled maxima are polished by single-sign flips from the best row.
        let Signs::Sampled { n, patterns } = self else { unreachable!() };
        let mut signs: Vec<f64> = patterns
            .chunks(*n)
            .max_by(|a, b| signed_norm(xs, a, norm).total_cmp(&signed_norm(xs, b, norm)))
            .map(|r| r.to_vec())
            .unwrap_or_else(|| vec![1.0; *n]);
        let mut cur = signed_norm(xs, &signs, norm);
        loop {
            let mut improved = false;
            for k in 0..*n {
                signs[k] = -signs[k];
                let v = signed_norm(xs, &signs, norm);
                if v > cur {
                    cur = v;
                    improved = true;
                } else {
                    signs[k] = -signs[k];
                }
            }
            if !improved {
                break;
            }
        }
        best.max(cur)
    }
}

fn signed_norm(xs: &[Vec<C64>], signs: &[f64], norm: &NormSpec) -> f64 {
    let d = xs.first().map_or(0, |x| x.len());
    let mut sum = vec![ZERO; d];
    for (e, x) in signs.iter().zip(xs) {
        sum.iter_mut().zip(x).for_each(|(s, v)| *s += v * *e);
    }
    norm.norm(&sum)
}

/// `(E||Σ ε_k x_k||²)^{1/2}`: exhaustive over sign patterns when
/// `n ≤ n_max`, Monte Carlo otherwise.
pub fn rademacher_mean(vectors: &[Vec<C64>], norm: &NormSpec, sign: &SignConfig) -> Result<RademacherMean> {
    check_vectors(vectors)?;
    Ok(Signs::new(vectors.len(), sign).mean(vectors, norm))
}

/// `max_{ε = ±1} ||Σ ε_k x_k||`; a lower bound when sampled.
pub fn sign_max(vectors: &[Vec<C64>], norm: &NormSpec, sign: &SignConfig) -> Result<f64> {
    check_vectors(vectors)?;
    Ok(Signs::new(vectors.len(), sign).max(vectors, norm))
}

fn check_vectors(vectors: &[Vec<C64>]) -> Result<()> {
    let first = vectors.first().ok_or_else(|| Error::InvalidInput("no vectors".into()))?;
    if vectors.iter().any(|v| v.len() != first.len()) {
        return Err(Error::DimensionMismatch("vectors of different lengths".into()));
    }
    Ok(())
}

/// Bilinear pairing `<x, x*> = Σ x_i x*_i`.
pub(crate) fn pair(x: &[C64], xs: &[C64]) -> C64 {
    x.iter().zip(xs).map(|(a, b)| a * b).sum()
}
