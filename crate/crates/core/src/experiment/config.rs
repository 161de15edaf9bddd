use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::calculus::{BoundMode, TestFamily};
use crate::contour::ContourSpec;
use crate::functions::{BivariateSpec, FunctionSpec};
use crate::generators::{commuting_pair, jordan_block, random_diagonalizable, RandomSpec};
use crate::json::{Cplx, MatrixJson};
use crate::linalg::{c, identity};
use crate::norms::NormSpec;
use crate::operators::{OperatorMatrix, SectorGrid};
use crate::rbound::{AngleCurveConfig, SignConfig};
use crate::search::SearchConfig;
use crate::sums::SumSampleConfig;
use crate::Result;

/// A matrix given inline as `{dim, re, im}` or by a named generator
/// (`{"gen": ...}`).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Generated(Generator),
    Inline(MatrixJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gen", rename_all = "snake_case")]
pub enum Generator {
    Identity {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    Diagonal { values: Vec<Cplx> },
    Jordan {
        dim: usize,
        lambda: Cplx,
        #[serde(default = "one")]
        off: f64,
    },
    /// Random diagonalizable matrix; the seed defaults to the experiment seed.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        spec: RandomSpec,
    },
}

fn one() -> f64 {
    1.0
}

/// Dispatch on the presence of `gen`, so errors name the real problem
/// instead of "no variant matched".
fn tagged_or_inline<'de, D, G, I, T>(d: D, gen: fn(G) -> T, inline: fn(I) -> T) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    G: serde::de::DeserializeOwned,
    I: serde::de::DeserializeOwned,
{
    let v = Value::deserialize(d)?;
    if v.get("gen").is_some() {
        serde_json::from_value(v).map(gen).map_err(D::Error::custom)
    } else {
        serde_json::from_value(v).map(inline).map_err(D::Error::custom)
    }
}

impl<'de> Deserialize<'de> for OperatorSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        tagged_or_inline(d, OperatorSpec::Generated, OperatorSpec::Inline)
    }
}

impl OperatorSpec {
    pub fn build(&self, seed: u64) -> Result<OperatorMatrix> {
        match self {
            OperatorSpec::Inline(m) => OperatorMatrix::new(m.to_matrix()?),
            OperatorSpec::Generated(g) => match g {
                Generator::Identity { dim, scale } => OperatorMatrix::new(identity(*dim) * c(*scale, 0.0)),
                Generator::Diagonal { values } => OperatorMatrix::diagonal(&values.iter().map(|z| z.0).collect::<Vec<_>>()),
                Generator::Jordan { dim, lambda, off } => jordan_block(*dim, lambda.0, *off),
                Generator::Random { seed: s, spec } => random_diagonalizable(s.unwrap_or(seed), spec),
            },
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, OperatorSpec::Generated(Generator::Random { .. }))
    }
}

/// A commuting pair, inline or from a shared random eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PairSpec {
    Generated(PairGenerator),
    Inline { a: OperatorSpec, b: OperatorSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gen", rename_all = "snake_case")]
pub enum PairGenerator {
    CommutingPair {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        spec: RandomSpec,
        angle_b: f64,
    },
}

#[derive(Deserialize)]
struct InlinePair {
    a: OperatorSpec,
    b: OperatorSpec,
}

impl<'de> Deserialize<'de> for PairSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        tagged_or_inline(d, PairSpec::Generated, |p: InlinePair| PairSpec::Inline { a: p.a, b: p.b })
    }
}

impl PairSpec {
    pub fn build(&self, seed: u64) -> Result<(OperatorMatrix, OperatorMatrix)> {
        match self {
            PairSpec::Inline { a, b } => Ok((a.build(seed)?, b.build(seed)?)),
            PairSpec::Generated(PairGenerator::CommutingPair { seed: s, spec, angle_b }) => {
                commuting_pair(s.unwrap_or(seed), spec, *angle_b)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FcalcRoute {
    /// `contour` for functions with a decay certificate, `regularized` otherwise.
    #[default]
    Auto,
    Contour,
    Regularized,
    Operator,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcalcConfig {
    #[serde(alias = "A")]
    pub a: OperatorSpec,
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    #[serde(default)]
    pub route: FcalcRoute,
    #[serde(default)]
    pub contour: Option<ContourSpec>,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
    /// Exponent of the `ζ^{-s} A^s R(ζ,A)` representation (operator route).
    #[serde(default = "half")]
    pub s: f64,
    /// Second operator and bivariate function (joint route).
    #[serde(default, alias = "B")]
    pub b: Option<OperatorSpec>,
    #[serde(default)]
    pub bivariate: Option<BivariateSpec>,
    #[serde(default)]
    pub regularization: Option<f64>,
}

fn default_n_max() -> u32 {
    64
}

fn default_ceiling() -> f64 {
    1e8
}

fn half() -> f64 {
    0.5
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertiesConfig {
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_n() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RboundConfig {
    #[serde(default)]
    pub family: Vec<OperatorSpec>,
    pub norm: NormSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub sign: SignConfig,
    #[serde(default)]
    pub search: SearchConfig,
    /// Also estimate the (α), (A), (Δ) constants of the norm.
    #[serde(default)]
    pub properties: Option<PropertiesConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglesConfig {
    #[serde(alias = "A")]
    pub a: OperatorSpec,
    pub norm: NormSpec,
    /// Angles for the sectoriality constant `sup ||ζR(ζ,A)||`.
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub grid: Option<SectorGrid>,
    /// Angles for the R/WR/U curves.
    #[serde(default)]
    pub curve_angles: Vec<f64>,
    #[serde(default)]
    pub curve: AngleCurveConfig,
    /// All three curves (cross-seeded) instead of `curve.kind` alone.
    #[serde(default)]
    pub ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub nu: f64,
    #[serde(default = "half")]
    pub s: f64,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    pub k: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_starts() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantConfig {
    pub sigma: f64,
    #[serde(default)]
    pub family: TestFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicConfig {
    pub function: FunctionSpec,
    #[serde(default = "one")]
    pub t: f64,
    pub k: usize,
    #[serde(default = "default_mode")]
    pub mode: BoundMode,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_mode() -> BoundMode {
    BoundMode::Exhaustive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HinfConfig {
    #[serde(alias = "A")]
    pub a: OperatorSpec,
    pub norm: NormSpec,
    #[serde(default)]
    pub criterion: Option<CriterionConfig>,
    #[serde(default)]
    pub constant: Option<ConstantConfig>,
    #[serde(default)]
    pub dyadic: Option<DyadicConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumConfig {
    pub pair: PairSpec,
    pub norm: NormSpec,
    #[serde(default)]
    pub search: SearchConfig,
    /// Sector angle for the R-sectoriality of `A + B`; skipped when absent.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub sample: SumSampleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SDeltaConfig {
    pub deltas: Vec<f64>,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxregConfig {
    #[serde(alias = "A")]
    pub a: OperatorSpec,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(alias = "T", default = "one")]
    pub horizon: f64,
    pub m_levels: Vec<usize>,
    #[serde(default)]
    pub forcing: Option<Vec<Vec<Cplx>>>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub s_delta: Option<SDeltaConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtConfig {
    #[serde(alias = "A")]
    pub a: OperatorSpec,
    #[serde(default = "half")]
    pub s: f64,
    pub nu: f64,
    /// Vector for a single integral; the ratio interval is always computed.
    #[serde(default)]
    pub x: Option<Vec<Cplx>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Nodes per decade for each refinement level; empty means the automatic
    /// choice and its doubling.
    #[serde(default)]
    pub nodes_per_decade: Vec<usize>,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Experiment {
    Fcalc(FcalcConfig),
    Rbound(RboundConfig),
    Angles(AnglesConfig),
    Hinf(HinfConfig),
    Sum(SumConfig),
    Maxreg(MaxregConfig),
    Gt(GtConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fcalc(_) => "fcalc",
            Experiment::Rbound(_) => "rbound",
            Experiment::Angles(_) => "angles",
            Experiment::Hinf(_) => "hinf",
            Experiment::Sum(_) => "sum",
            Experiment::Maxreg(_) => "maxreg",
            Experiment::Gt(_) => "gt",
        }
    }

    /// Whether any randomized estimator or generator is involved, in which
    /// case a seed is mandatory.
    pub fn is_randomized(&self) -> bool {
        match self {
            Experiment::Fcalc(f) => f.a.is_random() || f.b.as_ref().is_some_and(|b| b.is_random()),
            Experiment::Angles(a) => !a.curve_angles.is_empty() || a.a.is_random(),
            Experiment::Hinf(h) => h.constant.is_some() || h.criterion.is_some() || h.dyadic.is_some() || h.a.is_random(),
            _ => true,
        }
    }
}

/// Output locations; the CLI's `--out` takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub json: Option<String>,
    #[serde(default)]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    /// Master seed: replaces every estimator seed and fills generator seeds
    /// left unset.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputPaths,
}

fn is_default_output(o: &OutputPaths) -> bool {
    *o == OutputPaths::default()
}
