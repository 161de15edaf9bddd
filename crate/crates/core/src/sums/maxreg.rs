use serde::{Deserialize, Serialize};

use crate::calculus::AltdefNodes;
use crate::error::{Error, Result};
use crate::estimate::{BoundEstimate, MethodInfo, Witness};
use crate::json::{vector_from_json, vector_json, Cplx};
use crate::linalg::{identity, inverse, CMat, C64, ZERO};
use crate::norms::NormSpec;
use crate::operators::{spectral_angle, FractionalExponent, OperatorMatrix};
use crate::opnorm::{duality_ascent, lanczos_top_singular, LinearOp};
use crate::search::SearchConfig;

fn check_analytic(a: &OperatorMatrix) -> Result<f64> {
    let w = spectral_angle(a)?;
    if w >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::AngleExceeded(w));
    }
    Ok(w)
}

/// `u ↦ e^{-uA}`, by the eigen-oracle when the eigenbasis is well
/// conditioned and by the `ζ^{-s} A^s R(ζ,A)` contour representation
/// otherwise.
pub enum Semigroup {
    Eigen { values: Vec<C64>, vectors: CMat, vectors_inv: CMat },
    Contour { zetas: Vec<C64>, kernels: Vec<CMat> },
}

impl Semigroup {
    pub fn new(a: &OperatorMatrix) -> Result<Self> {
        check_analytic(a)?;
        let e = a.eigen();
        if let (true, Some(vi)) = (a.is_diagonalizable(), &e.vectors_inv) {
            return Ok(Semigroup::Eigen { values: e.values.clone(), vectors: e.vectors.clone(), vectors_inv: vi.clone() });
        }
        // |e^{-uz}| ≤ 1 on the closed right half-plane.
        let alt = AltdefNodes::new(a, std::f64::consts::FRAC_PI_2, 1.0, FractionalExponent::new(0.5)?, None)?;
        let kernels = alt.nodes.iter().map(|n| alt.kernel(n)).collect::<Result<Vec<_>>>()?;
        Ok(Semigroup::Contour { zetas: alt.nodes.iter().map(|n| n.zeta).collect(), kernels })
    }

    pub fn route(&self) -> &'static str {
        match self {
            Semigroup::Eigen { .. } => "eigen",
            Semigroup::Contour { .. } => "contour",
        }
    }

    pub fn at(&self, u: f64) -> CMat {
        match self {
            Semigroup::Eigen { values, vectors, vectors_inv } => {
                let d = values.len();
                let scaled = CMat::from_fn(d, d, |i, j| vectors[(i, j)] * (-u * values[j]).exp());
                scaled * vectors_inv
            }
            Semigroup::Contour { zetas, kernels } => {
                let d = kernels[0].nrows();
                let terms: Vec<CMat> = zetas.iter().zip(kernels).map(|(z, k)| k * (-u * z).exp()).collect();
                crate::linalg::pairwise_sum(&terms, d, d)
            }
        }
    }
}

/// `e^{-uA}` at a single `u ≥ 0`.
pub fn semigroup(a: &OperatorMatrix, u: f64) -> Result<CMat> {
    Ok(Semigroup::new(a)?.at(u))
}

/// `y' + Ay = f`, `y(0) = 0` on `[0, T]` with `m` implicit Euler steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyProblem {
    pub a: OperatorMatrix,
    pub horizon: f64,
    pub m: usize,
    pub p: f64,
    /// Exponent of the norm on `C^d` inside the time grid.
    #[serde(default = "two")]
    pub q: f64,
    /// Optional `m × d` forcing samples, used as a search start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<Vec<Vec<Cplx>>>,
}

fn two() -> f64 {
    2.0
}

impl CauchyProblem {
    pub fn new(a: OperatorMatrix, horizon: f64, m: usize, p: f64) -> Result<Self> {
        let prob = CauchyProblem { a, horizon, m, p, q: 2.0, forcing: None };
        prob.validate()?;
        Ok(prob)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 8 || !(self.horizon > 0.0) || !(self.p > 1.0 && self.p < f64::INFINITY) || !(self.q >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "Cauchy problem needs m ≥ 8, T > 0, 1 < p < ∞, q ≥ 1 (m = {}, T = {}, p = {}, q = {})",
                self.m, self.horizon, self.p, self.q
            )));
        }
        if let Some(f) = &self.forcing {
            if f.len() != self.m || f.iter().any(|r| r.len() != self.a.dim()) {
                return Err(Error::DimensionMismatch("forcing must be m × d".into()));
            }
        }
        check_analytic(&self.a).map(|_| ())
    }

    fn grid_norm(&self, m: usize) -> NormSpec {
        let h = self.horizon / m as f64;
        NormSpec::Grid { points: m, p: self.p, q: self.q, scale: h.powf(1.0 / self.p) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    A,
    B,
}

/// `f ↦ Ãy` or `f ↦ B̃y` for the implicit Euler solution `y`.
struct SolutionMap {
    a: CMat,
    at: CMat,
    step: CMat,
    step_t: CMat,
    h: f64,
    m: usize,
    d: usize,
    part: Part,
}

impl SolutionMap {
    fn new(a: &CMat, h: f64, m: usize, part: Part) -> Result<Self> {
        let d = a.nrows();
        let step = inverse(&(identity(d) + a * C64::new(h, 0.0)))
            .ok_or_else(|| Error::InvalidInput("I + hA is singular".into()))?;
        Ok(SolutionMap { a: a.clone(), at: a.transpose(), step_t: step.transpose(), step, h, m, d, part })
    }

    fn a_part(&self, f: &[C64]) -> Vec<C64> {
        let (d, h) = (self.d, C64::new(self.h, 0.0));
        let mut out = vec![ZERO; self.m * d];
        let mut y = vec![ZERO; d];
        for j in 0..self.m {
            let rhs: Vec<C64> = (0..d).map(|i| f[j * d + i] * h + y[i]).collect();
            y = self.step.apply(&rhs);
            out[j * d..(j + 1) * d].copy_from_slice(&self.a.apply(&y));
        }
        out
    }

    fn a_part_t(&self, g: &[C64]) -> Vec<C64> {
        let (d, h) = (self.d, C64::new(self.h, 0.0));
        let mut out = vec![ZERO; self.m * d];
        let mut z = vec![ZERO; d];
        for j in (0..self.m).rev() {
            let w = self.at.apply(&g[j * d..(j + 1) * d]);
            let rhs: Vec<C64> = (0..d).map(|i| w[i] * h + z[i]).collect();
            z = self.step_t.apply(&rhs);
            out[j * d..(j + 1) * d].copy_from_slice(&z);
        }
        out
    }
}

impl LinearOp for SolutionMap {
    fn dim_in(&self) -> usize {
        self.m * self.d
    }
    fn dim_out(&self) -> usize {
        self.m * self.d
    }
    fn apply(&self, f: &[C64]) -> Vec<C64> {
        let ay = self.a_part(f);
        match self.part {
            Part::A => ay,
            Part::B => f.iter().zip(ay).map(|(x, y)| x - y).collect(),
        }
    }
    fn apply_transpose(&self, g: &[C64]) -> Vec<C64> {
        let t = self.a_part_t(g);
        match self.part {
            Part::A => t,
            Part::B => g.iter().zip(t).map(|(x, y)| x - y).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityLevel {
    pub m: usize,
    pub h: f64,
    /// Norm of `f ↦ Ãy`.
    pub a_part: f64,
    /// Norm of `f ↦ B̃y`.
    pub b_part: f64,
    /// `sup (||B̃y|| + ||Ãy||) / ||f||`, a lower bound between
    /// `max(a_part, b_part)` and `a_part + b_part`.
    pub combined: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub p: f64,
    pub q: f64,
    pub horizon: f64,
    pub levels: Vec<RegularityLevel>,
    /// Combined constant at the finest level.
    pub constant: f64,
    /// Relative change of the combined constant over the last refinement.
    pub drift: f64,
    pub seed: u64,
}

fn hint_vectors(a: &OperatorMatrix, m: usize, forcing: Option<&[Vec<Cplx>]>) -> Vec<Vec<C64>> {
    let d = a.dim();
    let e = a.eigen();
    let mut hints = Vec::new();
    if let Some(f) = forcing {
        hints.push(f.iter().flat_map(|r| vector_from_json(r).iter().copied().collect::<Vec<_>>()).collect());
    }
    for j in 0..d {
        let v: Vec<C64> = e.vectors.column(j).iter().copied().collect();
        // Slowly varying and alternating forcing along each eigenvector.
        hints.push((0..m).flat_map(|_| v.clone()).collect());
        hints.push((0..m).flat_map(|t| v.iter().map(move |z| if t % 2 == 0 { *z } else { -*z })).collect());
    }
    hints
}

/// Constants of the discrete maximal-regularity estimate at each grid size:
/// singular values (Golub–Kahan–Lanczos) for the separate parts when
/// `p = q = 2`, duality ascent otherwise and for the combined constant.
pub fn maximal_regularity_constant(prob: &CauchyProblem, levels: &[usize], search: &SearchConfig) -> Result<RegularityReport> {
    prob.validate()?;
    let levels: Vec<usize> = if levels.is_empty() { vec![prob.m] } else { levels.to_vec() };
    if let Some(bad) = levels.iter().find(|&&m| m < 8) {
        return Err(Error::InvalidInput(format!("refinement level m = {bad} < 8")));
    }
    let hilbert = prob.p == 2.0 && prob.q == 2.0;
    let mut out = Vec::with_capacity(levels.len());
    for &m in &levels {
        let h = prob.horizon / m as f64;
        let norm = prob.grid_norm(m);
        let pa = SolutionMap::new(prob.a.matrix(), h, m, Part::A)?;
        let pb = SolutionMap::new(prob.a.matrix(), h, m, Part::B)?;
        let forcing = prob.forcing.as_deref().filter(|f| f.len() == m);
        let hints = hint_vectors(&prob.a, m, forcing);
        let (a_part, b_part, method) = if hilbert {
            (
                lanczos_top_singular(&pa, 400, 1e-12, search.seed),
                lanczos_top_singular(&pb, 400, 1e-12, search.seed),
                "lanczos+ascent",
            )
        } else {
            (
                duality_ascent(&[&pa], &norm, &norm, &hints, search.starts, search.seed).value,
                duality_ascent(&[&pb], &norm, &norm, &hints, search.starts, search.seed).value,
                "ascent",
            )
        };
        let combined = duality_ascent(&[&pa, &pb], &norm, &norm, &hints, search.starts, search.seed).value;
        out.push(RegularityLevel { m, h, a_part, b_part, combined: combined.max(a_part.max(b_part)), method: method.into() });
    }
    let constant = out.last().map_or(0.0, |l| l.combined);
    let drift = if out.len() >= 2 {
        let prev = out[out.len() - 2].combined;
        (constant - prev).abs() / prev.max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    Ok(RegularityReport { p: prob.p, q: prob.q, horizon: prob.horizon, levels: out, constant, drift, seed: search.seed })
}

/// Causal convolution `f ↦ ∫_δ^∞ A e^{-uA} f(· - u) du` for piecewise
/// constant `f`, with exact cell integrals `e^{-aA} - e^{-bA}`.
struct SDelta {
    /// Partial cell `(index, weight)` when `δ` is not a grid point.
    partial: Option<(usize, CMat)>,
    k1: usize,
    e: CMat,
    g0: CMat,
    m: usize,
    d: usize,
}

impl SDelta {
    fn new(sg: &Semigroup, delta: f64, h: f64, m: usize) -> Self {
        let d = match sg {
            Semigroup::Eigen { values, .. } => values.len(),
            Semigroup::Contour { kernels, .. } => kernels[0].nrows(),
        };
        let k1 = ((delta / h) * (1.0 - 1e-12)).ceil().max(0.0) as usize;
        let e = sg.at(h);
        let ek1 = sg.at(k1 as f64 * h);
        let g0 = &ek1 * (identity(d) - &e);
        let partial = (k1 > 0 && delta > (k1 - 1) as f64 * h * (1.0 + 1e-12)).then(|| (k1 - 1, sg.at(delta) - &ek1));
        SDelta { partial, k1, e, g0, m, d }
    }

    fn run(&self, f: &[C64], transpose: bool) -> Vec<C64> {
        let (m, d) = (self.m, self.d);
        let (e, g0) = if transpose { (self.e.transpose(), self.g0.transpose()) } else { (self.e.clone(), self.g0.clone()) };
        let mut out = vec![ZERO; m * d];
        let mut g = vec![ZERO; d];
        let order: Box<dyn Iterator<Item = usize>> = if transpose { Box::new((0..m).rev()) } else { Box::new(0..m) };
        for i in order {
            let mut next = e.apply(&g);
            // Forward: source index i - k1; transpose: i + k1.
            let src = if transpose { i.checked_add(self.k1).filter(|&s| s < m) } else { i.checked_sub(self.k1) };
            if let Some(s) = src {
                let add = g0.apply(&f[s * d..(s + 1) * d]);
                next.iter_mut().zip(add).for_each(|(x, y)| *x += y);
            }
            g = next;
            let slot = &mut out[i * d..(i + 1) * d];
            slot.copy_from_slice(&g);
            if let Some((k0, w)) = &self.partial {
                let src = if transpose { i.checked_add(*k0).filter(|&s| s < m) } else { i.checked_sub(*k0) };
                if let Some(s) = src {
                    let wt = if transpose { w.transpose() } else { w.clone() };
                    let add = wt.apply(&f[s * d..(s + 1) * d]);
                    slot.iter_mut().zip(add).for_each(|(x, y)| *x += y);
                }
            }
        }
        out
    }
}

impl LinearOp for SDelta {
    fn dim_in(&self) -> usize {
        self.m * self.d
    }
    fn dim_out(&self) -> usize {
        self.m * self.d
    }
    fn apply(&self, f: &[C64]) -> Vec<C64> {
        self.run(f, false)
    }
    fn apply_transpose(&self, g: &[C64]) -> Vec<C64> {
        self.run(g, true)
    }
}

fn s_delta_with(
    sg: &Semigroup,
    a: &OperatorMatrix,
    delta: f64,
    p: f64,
    horizon: f64,
    m: usize,
    search: &SearchConfig,
) -> Result<BoundEstimate> {
    if !(delta >= 0.0) || !(horizon > 0.0) || m < 8 || !(p > 1.0 && p < f64::INFINITY) {
        return Err(Error::InvalidInput(format!("need δ ≥ 0, T > 0, m ≥ 8, 1 < p < ∞ (δ = {delta}, m = {m}, p = {p})")));
    }
    let h = horizon / m as f64;
    let op = SDelta::new(sg, delta, h, m);
    let mut method = MethodInfo::new(if p == 2.0 { "lanczos" } else { "ascent" }).note(format!("semigroup via {}", sg.route()));
    method.seed = Some(search.seed);
    let (value, witness) = if p == 2.0 {
        (lanczos_top_singular(&op, 400, 1e-12, search.seed), Witness::None)
    } else {
        let norm = NormSpec::Grid { points: m, p, q: 2.0, scale: h.powf(1.0 / p) };
        let r = duality_ascent(&[&op], &norm, &norm, &hint_vectors(a, m, None), search.starts, search.seed);
        method.starts = search.starts;
        method.evaluations = r.iterations;
        (r.value, Witness::Vector { x: vector_json(&r.x) })
    };
    Ok(BoundEstimate::new(value, witness, method, true))
}

/// Norm of the truncated convolution `S_δ` on `L_p([0,T]; ℓ2(d))`.
pub fn s_delta_norm(a: &OperatorMatrix, delta: f64, p: f64, horizon: f64, m: usize, search: &SearchConfig) -> Result<BoundEstimate> {
    let sg = Semigroup::new(a)?;
    s_delta_with(&sg, a, delta, p, horizon, m, search)
}

/// `S_δ` norms over a sweep of `δ` on one grid.
pub fn s_delta_sweep(
    a: &OperatorMatrix,
    deltas: &[f64],
    p: f64,
    horizon: f64,
    m: usize,
    search: &SearchConfig,
) -> Result<Vec<(f64, BoundEstimate)>> {
    let sg = Semigroup::new(a)?;
    deltas.iter().map(|&dl| Ok((dl, s_delta_with(&sg, a, dl, p, horizon, m, search)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::jordan_block;
    use crate::linalg::{c, real_diag, rel_err};

    fn quick() -> SearchConfig {
        SearchConfig { starts: 2, ..Default::default() }
    }

    #[test]
    fn contour_semigroup_matches_closed_form() {
        let j = jordan_block(2, c(1.0, 0.0), 1.0).unwrap();
        let sg = Semigroup::new(&j).unwrap();
        assert_eq!(sg.route(), "contour");
        for u in [0.0, 0.3, 2.0] {
            let e = (-u as f64).exp();
            let exact = crate::linalg::from_real_rows(2, &[e, -u * e, 0.0, e]);
            assert!(rel_err(&sg.at(u), &exact) < 1e-8, "u = {u}: {}", rel_err(&sg.at(u), &exact));
        }
    }

    #[test]
    fn solution_map_transpose_is_consistent() {
        let a = crate::linalg::from_real_rows(2, &[1.0, 0.3, 0.0, 2.0]);
        let s = SolutionMap::new(&a, 0.1, 9, Part::B).unwrap();
        let f: Vec<C64> = (0..18).map(|k| c((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let g: Vec<C64> = (0..18).map(|k| c((k as f64 * 0.7).cos(), 1.0 / (1.0 + k as f64))).collect();
        let lhs: C64 = s.apply(&f).iter().zip(&g).map(|(x, y)| x * y).sum();
        let rhs: C64 = f.iter().zip(s.apply_transpose(&g)).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn s_delta_transpose_is_consistent() {
        let a = OperatorMatrix::new(crate::linalg::from_real_rows(2, &[1.0, 0.3, 0.0, 2.0])).unwrap();
        let sg = Semigroup::new(&a).unwrap();
        let op = SDelta::new(&sg, 0.25, 0.1, 12);
        assert!(op.partial.is_some());
        let f: Vec<C64> = (0..24).map(|k| c((k as f64).sin(), 0.2)).collect();
        let g: Vec<C64> = (0..24).map(|k| c(0.1 * k as f64, (k as f64).cos())).collect();
        let lhs: C64 = op.apply(&f).iter().zip(&g).map(|(x, y)| x * y).sum();
        let rhs: C64 = f.iter().zip(op.apply_transpose(&g)).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn maxreg_small_a_vanishes() {
        let prob = CauchyProblem::new(OperatorMatrix::new(real_diag(&[1e-6])).unwrap(), 1.0, 32, 2.0).unwrap();
        let r = maximal_regularity_constant(&prob, &[], &quick()).unwrap();
        assert!(r.levels[0].a_part < 1e-5);
    }

    #[test]
    fn angle_precondition() {
        let a = OperatorMatrix::new(crate::linalg::diag(&[C64::from_polar(1.0, 1.7)])).unwrap();
        assert!(matches!(CauchyProblem::new(a, 1.0, 16, 2.0), Err(Error::AngleExceeded(_))));
    }

    #[test]
    fn s_delta_examples() {
        let a = OperatorMatrix::new(real_diag(&[1.0, 5.0])).unwrap();
        let sweep = s_delta_sweep(&a, &[0.0, 0.05, 0.2, 1.0, 2.0], 2.0, 1.0, 64, &quick()).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].1.value <= w[0].1.value * (1.0 + 1e-9));
        }
        assert!(sweep[3].1.value.abs() < 1e-12 && sweep[4].1.value.abs() < 1e-12);
        let p3 = s_delta_norm(&a, 0.05, 3.0, 1.0, 32, &quick()).unwrap();
        assert!(p3.value > 0.0 && p3.value <= 1.0 + 1e-9);
    }

    #[test]
    fn s_delta_tends_to_one_for_scalar_generator() {
        let a = OperatorMatrix::new(real_diag(&[200.0])).unwrap();
        let e = s_delta_norm(&a, 0.0, 2.0, 1.0, 512, &quick()).unwrap();
        assert!((e.value - 1.0).abs() < 0.01, "{}", e.value);
    }
}
