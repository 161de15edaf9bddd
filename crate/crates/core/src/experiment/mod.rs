//! Config-driven experiments: one JSON config in, one JSON report (plus an
//! optional CSV table) out. Identical configs give identical reports apart
//! from the `timing` block.

mod config;
mod selftest;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calculus::{
    contour_fcalc, default_t_grid, hinfty_constant, hinfty_criterion, joint_fcalc, operator_fcalc, regularized_fcalc,
    unconditional_dyadic_bound, JointOptions,
};
use crate::error::Error;
use crate::functions::OperatorFunction;
use crate::linalg::{identity, rel_err, C64};
use crate::json::vector_from_json;
use crate::operators::{sectorial_constant, FractionalExponent, Sector};
use crate::rbound::{bounds_ordered, property_constants, r_sectorial_angle, r_sectorial_curves, OperatorFamily};
use crate::sums::{
    gt_absolute_integral, gt_ratio_interval, inverse_sum_operator, maximal_regularity_constant, s_delta_sweep, sum_closedness_constant,
    sum_r_sectoriality, CauchyProblem, CommutingPair,
};

pub use config::{
    AnglesConfig, ConstantConfig, CriterionConfig, DyadicConfig, Experiment, ExperimentConfig, FcalcConfig, FcalcRoute, Generator,
    GtConfig, HinfConfig, MaxregConfig, OperatorSpec, OutputPaths, PairGenerator, PairSpec, PropertiesConfig, RboundConfig,
    SDeltaConfig, SumConfig,
};
pub use selftest::{selftest, SelftestCase, SelftestOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum ExperimentError {
    /// Unparseable or schema-invalid configuration.
    Config(String),
    /// A precondition of the numerical routine failed.
    Domain(Error),
    Io(String),
    /// Names of the failing self-test cases.
    SelfTest(Vec<String>),
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentError::Config(m) => write!(f, "ConfigError: {m}"),
            ExperimentError::Domain(e) => write!(f, "DomainError: {e}"),
            ExperimentError::Io(m) => write!(f, "IoError: {m}"),
            ExperimentError::SelfTest(ids) => write!(f, "SelfTestFailure: {}", ids.join(", ")),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<Error> for ExperimentError {
    fn from(e: Error) -> Self {
        ExperimentError::Domain(e)
    }
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Domain(_) => 3,
            ExperimentError::SelfTest(_) => 4,
            ExperimentError::Io(_) => 1,
        }
    }
}

pub type ExperimentResult<T> = std::result::Result<T, ExperimentError>;

/// A CSV table of curves or traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    /// The resolved configuration (seed overrides applied).
    pub config: Value,
    pub results: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub timing: Timing,
}

impl Report {
    /// The report without wall times, as pretty JSON.
    pub fn numerical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Some(o) = v.as_object_mut() {
            o.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Refinement levels: grid sizes `m` for `maxreg`, nodes per decade for `gt`.
    pub refine: Option<Vec<usize>>,
}

/// Parses a config, filling in the command when the JSON omits it and
/// rejecting a mismatch.
pub fn parse_config(text: &str, command: Option<&str>) -> ExperimentResult<ExperimentConfig> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| ExperimentError::Config(format!("malformed JSON: {e}")))?;
    let obj = v.as_object_mut().ok_or_else(|| ExperimentError::Config("config must be a JSON object".into()))?;
    match (obj.get("command").and_then(Value::as_str), command) {
        (Some(c), Some(want)) if c != want => {
            return Err(ExperimentError::Config(format!("config is for `{c}`, not `{want}`")));
        }
        (None, Some(want)) => {
            obj.insert("command".into(), Value::String(want.into()));
        }
        (None, None) => return Err(ExperimentError::Config("config has no `command`".into())),
        _ => {}
    }
    serde_json::from_value(v).map_err(|e| ExperimentError::Config(e.to_string()))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("results serialize")
}

fn seeded(cfg: &mut ExperimentConfig) {
    let Some(seed) = cfg.seed else { return };
    match &mut cfg.experiment {
        Experiment::Rbound(r) => {
            r.search.seed = seed;
            r.sign.seed = seed;
        }
        Experiment::Angles(a) => {
            a.curve.search.seed = seed;
            a.curve.sign.seed = seed;
        }
        Experiment::Hinf(h) => {
            if let Some(c) = &mut h.constant {
                c.family.seed = seed;
            }
        }
        Experiment::Sum(s) => {
            s.search.seed = seed;
            s.sample.search.seed = seed;
            s.sample.sign.seed = seed;
        }
        Experiment::Maxreg(m) => m.search.seed = seed,
        Experiment::Fcalc(_) | Experiment::Gt(_) => {}
    }
}

fn apply_refine(cfg: &mut ExperimentConfig, refine: &[usize]) -> ExperimentResult<()> {
    match &mut cfg.experiment {
        Experiment::Maxreg(m) => m.m_levels = refine.to_vec(),
        Experiment::Gt(g) => g.nodes_per_decade = refine.to_vec(),
        other => return Err(ExperimentError::Config(format!("--refine does not apply to `{}`", other.name()))),
    }
    Ok(())
}

/// Runs one experiment.
pub fn run(mut cfg: ExperimentConfig, opts: &RunOptions) -> ExperimentResult<Report> {
    if opts.seed.is_some() {
        cfg.seed = opts.seed;
    }
    if let Some(r) = &opts.refine {
        apply_refine(&mut cfg, r)?;
    }
    if cfg.experiment.is_randomized() && cfg.seed.is_none() {
        return Err(ExperimentError::Config(format!("`{}` uses randomized estimators; a `seed` is required", cfg.experiment.name())));
    }
    seeded(&mut cfg);
    let seed = cfg.seed.unwrap_or(0);
    let start = Instant::now();
    let (results, table) = match &cfg.experiment {
        Experiment::Fcalc(c) => (run_fcalc(c, seed)?, None),
        Experiment::Rbound(c) => (run_rbound(c, seed)?, None),
        Experiment::Angles(c) => run_angles(c, seed)?,
        Experiment::Hinf(c) => (run_hinf(c, seed)?, None),
        Experiment::Sum(c) => (run_sum(c, seed)?, None),
        Experiment::Maxreg(c) => run_maxreg(c, seed)?,
        Experiment::Gt(c) => run_gt(c, seed)?,
    };
    Ok(Report {
        command: cfg.experiment.name().into(),
        version: VERSION.into(),
        config: to_value(&cfg),
        results,
        table,
        timing: Timing { total_seconds: start.elapsed().as_secs_f64() },
    })
}

fn config_err(m: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(m.into())
}

fn run_fcalc(c: &FcalcConfig, seed: u64) -> ExperimentResult<Value> {
    let a = c.a.build(seed)?;
    let route = match (c.route, &c.function) {
        (FcalcRoute::Joint, _) => FcalcRoute::Joint,
        (_, None) => return Err(config_err("`function` is required for this route")),
        (FcalcRoute::Auto, Some(f)) => {
            if f.build()?.decay.is_some() {
                FcalcRoute::Contour
            } else {
                FcalcRoute::Regularized
            }
        }
        (r, _) => r,
    };
    let oracle = |v: &crate::linalg::CMat, f: &crate::functions::ScalarFunction| -> Option<f64> {
        a.is_diagonalizable().then(|| rel_err(v, &a.eigen().apply(|z| f.eval(z))))
    };
    let out = match route {
        FcalcRoute::Contour => {
            let f = c.function.as_ref().expect("checked").build()?;
            let r = contour_fcalc(&a, &f, c.contour.as_ref())?;
            json!({ "route": "contour", "result": to_value(&r), "eigen_oracle_rel_err": oracle(&r.value, &f) })
        }
        FcalcRoute::Regularized => {
            let f = c.function.as_ref().expect("checked").build()?;
            let r = regularized_fcalc(&a, &f, c.contour.as_ref(), c.n_max, c.ceiling)?;
            json!({ "route": "regularized", "result": to_value(&r), "eigen_oracle_rel_err": oracle(&r.value, &f) })
        }
        FcalcRoute::Operator => {
            let f = c.function.as_ref().expect("checked").build()?;
            let of = OperatorFunction::scalar(&f, a.dim());
            let r = operator_fcalc(&a, &of, FractionalExponent::new(c.s)?, c.contour.as_ref())?;
            json!({ "route": "operator", "result": to_value(&r), "eigen_oracle_rel_err": oracle(&r.value, &f) })
        }
        FcalcRoute::Joint => {
            let b = c.b.as_ref().ok_or_else(|| config_err("joint route needs `b`"))?.build(seed)?;
            let f = c.bivariate.as_ref().ok_or_else(|| config_err("joint route needs `bivariate`"))?.build()?;
            let opts = JointOptions { regularization: c.regularization, ..Default::default() };
            let r = joint_fcalc(&a, &b, &f, &opts)?;
            json!({ "route": "joint", "result": to_value(&r) })
        }
        FcalcRoute::Auto => unreachable!("resolved above"),
    };
    Ok(out)
}

fn run_rbound(c: &RboundConfig, seed: u64) -> ExperimentResult<Value> {
    if c.family.is_empty() && c.properties.is_none() {
        return Err(config_err("rbound needs a `family` or `properties`"));
    }
    let mut out = serde_json::Map::new();
    if !c.family.is_empty() {
        let members = c.family.iter().map(|s| s.build(seed)).collect::<crate::Result<Vec<_>>>()?;
        let fam = OperatorFamily::new(members, c.norm.clone())?;
        let b = bounds_ordered(&fam, c.n, &c.sign, &c.search)?;
        out.insert("uniform_bound".into(), json!(fam.uniform_bound()));
        out.insert("r".into(), to_value(&b.r));
        out.insert("wr".into(), to_value(&b.wr));
        out.insert("u".into(), to_value(&b.u));
    }
    if let Some(p) = &c.properties {
        let pc = property_constants(&c.norm, p.dim, p.n, &c.sign, &c.search)?;
        out.insert("properties".into(), to_value(&pc));
    }
    Ok(Value::Object(out))
}

fn run_angles(c: &AnglesConfig, seed: u64) -> ExperimentResult<(Value, Option<Table>)> {
    let a = c.a.build(seed)?;
    let mut out = serde_json::Map::new();
    let mut table = Table::new(&["quantity", "sigma", "value"]);
    if !c.sigma.is_empty() {
        let grid = c.grid.unwrap_or_default();
        let mut pts = Vec::new();
        for &s in &c.sigma {
            let e = sectorial_constant(&a, Sector::new(s)?, &c.norm, &grid)?;
            table.push(vec!["sectorial".into(), num(s), num(e.value)]);
            pts.push(json!({ "sigma": s, "estimate": to_value(&e) }));
        }
        out.insert("sectorial_constant".into(), Value::Array(pts));
    }
    if !c.curve_angles.is_empty() {
        let curves = if c.ordered {
            r_sectorial_curves(&a, &c.norm, &c.curve_angles, &c.curve)?.to_vec()
        } else {
            vec![r_sectorial_angle(&a, &c.norm, &c.curve_angles, &c.curve)?]
        };
        for curve in &curves {
            for p in &curve.points {
                table.push(vec![curve.kind.name().to_string(), num(p.sigma), num(p.estimate.value)]);
            }
        }
        out.insert("curves".into(), to_value(&curves));
    }
    if out.is_empty() {
        return Err(config_err("angles needs `sigma` or `curve_angles`"));
    }
    Ok((Value::Object(out), Some(table)))
}

fn run_hinf(c: &HinfConfig, seed: u64) -> ExperimentResult<Value> {
    let a = c.a.build(seed)?;
    let mut out = serde_json::Map::new();
    if let Some(k) = &c.criterion {
        let grid = k.t_grid.clone().unwrap_or_else(default_t_grid);
        let e = hinfty_criterion(&a, k.nu, FractionalExponent::new(k.s)?, &grid, k.k, &c.norm, k.starts, seed)?;
        out.insert("criterion".into(), to_value(&e));
    }
    if let Some(k) = &c.constant {
        let e = hinfty_constant(&a, Sector::new(k.sigma)?, &k.family, &c.norm)?;
        out.insert("constant".into(), to_value(&e));
    }
    if let Some(k) = &c.dyadic {
        let f = k.function.build()?;
        let e = unconditional_dyadic_bound(&a, &f, k.t, k.k, &c.norm, k.mode, k.starts, seed)?;
        out.insert("dyadic".into(), to_value(&e));
    }
    if out.is_empty() {
        return Err(config_err("hinf needs `criterion`, `constant` or `dyadic`"));
    }
    Ok(Value::Object(out))
}

fn run_sum(c: &SumConfig, seed: u64) -> ExperimentResult<Value> {
    let (a, b) = c.pair.build(seed)?;
    let pair = CommutingPair::new(a, b)?;
    let opts = JointOptions::default();
    let f = inverse_sum_operator(&pair, &opts)?;
    let s = pair.sum();
    let residual_a = rel_err(&(&f.value * &s), pair.a.matrix());
    let residual_b = rel_err(&((identity(s.nrows()) - &f.value) * &s), pair.b.matrix());
    let closed = sum_closedness_constant(&pair, &c.norm, &c.search, &opts)?;
    let mut out = json!({
        "commutator": pair.commutator,
        "angle_sum": pair.angle_sum()?,
        "inverse_sum": to_value(&f),
        "residual_a": residual_a,
        "residual_b": residual_b,
        "closedness": to_value(&closed),
    });
    if let Some(rho) = c.rho {
        let r = sum_r_sectoriality(&pair, Sector::new(rho)?, &c.norm, &c.sample)?;
        out["r_sectoriality"] = to_value(&r);
    }
    Ok(out)
}

fn run_maxreg(c: &MaxregConfig, seed: u64) -> ExperimentResult<(Value, Option<Table>)> {
    let a = c.a.build(seed)?;
    let m = *c.m_levels.iter().max().ok_or_else(|| config_err("`m_levels` must not be empty"))?;
    let prob = CauchyProblem { a: a.clone(), horizon: c.horizon, m, p: c.p, q: c.q, forcing: c.forcing.clone() };
    let report = maximal_regularity_constant(&prob, &c.m_levels, &c.search)?;
    let mut table = Table::new(&["m", "h", "a_part", "b_part", "combined"]);
    for l in &report.levels {
        table.push(vec![l.m.to_string(), num(l.h), num(l.a_part), num(l.b_part), num(l.combined)]);
    }
    let mut out = json!({ "report": to_value(&report) });
    if let Some(sd) = &c.s_delta {
        let sweep = s_delta_sweep(&a, &sd.deltas, c.p, c.horizon, sd.m, &c.search)?;
        out["s_delta"] = Value::Array(sweep.iter().map(|(d, e)| json!({ "delta": d, "estimate": to_value(e) })).collect());
    }
    Ok((out, Some(table)))
}

fn run_gt(c: &GtConfig, seed: u64) -> ExperimentResult<(Value, Option<Table>)> {
    let a = c.a.build(seed)?;
    let s = FractionalExponent::new(c.s)?;
    let l1 = crate::norms::NormSpec::lp(1.0);
    let mut out = serde_json::Map::new();
    if let Some(x) = &c.x {
        let x: Vec<C64> = vector_from_json(x).iter().copied().collect();
        let npd = c.nodes_per_decade.first().copied();
        out.insert("integral".into(), to_value(&gt_absolute_integral(&a, s, c.nu, &x, &l1, npd)?));
    }
    let mut intervals = Vec::new();
    if c.nodes_per_decade.is_empty() {
        let first = gt_ratio_interval(&a, s, c.nu, c.samples, seed, None)?;
        let npd = first.nodes_per_decade;
        intervals.push(first);
        intervals.push(gt_ratio_interval(&a, s, c.nu, c.samples, seed, Some(2 * npd))?);
    } else {
        for &npd in &c.nodes_per_decade {
            intervals.push(gt_ratio_interval(&a, s, c.nu, c.samples, seed, Some(npd))?);
        }
    }
    let mut table = Table::new(&["nodes_per_decade", "min", "max"]);
    for i in &intervals {
        table.push(vec![i.nodes_per_decade.to_string(), num(i.min), num(i.max)]);
    }
    let stability = intervals
        .windows(2)
        .map(|w| ((w[1].min - w[0].min).abs() / w[1].min).max((w[1].max - w[0].max).abs() / w[1].max))
        .fold(0.0, f64::max);
    out.insert("intervals".into(), to_value(&intervals));
    out.insert("endpoint_change".into(), json!(stability));
    Ok((Value::Object(out), Some(table)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fcalc_identity_example() {
        let cfg = parse_config(r#"{"a": {"dim": 2, "re": [[1,0],[0,1]]}, "function": {"fn": "z_over_1pz_sq"}}"#, Some("fcalc")).unwrap();
        let r = run(cfg, &RunOptions::default()).unwrap();
        let re = &r.results["result"]["value"]["re"];
        assert!((re[0][0].as_f64().unwrap() - 0.25).abs() < 1e-10);
        assert!(re[0][1].as_f64().unwrap().abs() < 1e-10);
    }

    #[test]
    fn malformed_and_mismatched_configs() {
        assert!(matches!(parse_config("{not json", Some("fcalc")), Err(ExperimentError::Config(_))));
        assert!(matches!(parse_config(r#"{"command": "gt"}"#, Some("fcalc")), Err(ExperimentError::Config(_))));
        let cfg = parse_config(r#"{"family": [{"gen": "identity", "dim": 2}], "norm": {"kind": "lp", "p": 2}}"#, Some("rbound")).unwrap();
        assert!(matches!(run(cfg, &RunOptions::default()), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn rbound_scalar_family() {
        let cfg = parse_config(
            r#"{"family": [{"gen": "identity", "dim": 2}, {"gen": "identity", "dim": 2, "scale": 2}],
                "norm": {"kind": "lp", "p": 2}, "seed": 1, "search": {"starts": 4, "steps": 40}}"#,
            Some("rbound"),
        )
        .unwrap();
        let r = run(cfg, &RunOptions::default()).unwrap();
        assert!((r.results["r"]["value"].as_f64().unwrap() - 2.0).abs() < 0.04);
    }

    #[test]
    fn domain_errors_keep_their_name() {
        let cfg = parse_config(
            r#"{"A": {"gen": "diagonal", "values": [1, -1]}, "function": {"fn": "z_over_1pz_sq"}}"#,
            Some("fcalc"),
        )
        .unwrap();
        match run(cfg, &RunOptions::default()) {
            Err(ExperimentError::Domain(e)) => assert_eq!(e.name(), "NotSectorial"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let text = r#"{"A": {"gen": "random", "spec": {"dim": 3}}, "nu": 1.0, "samples": 10, "seed": 5}"#;
        let a = run(parse_config(text, Some("gt")).unwrap(), &RunOptions::default()).unwrap();
        let b = run(parse_config(text, Some("gt")).unwrap(), &RunOptions::default()).unwrap();
        assert_eq!(a.numerical_json(), b.numerical_json());
        let c = run(parse_config(text, Some("gt")).unwrap(), &RunOptions { seed: Some(6), refine: None }).unwrap();
        assert_ne!(a.numerical_json(), c.numerical_json());
    }
}
