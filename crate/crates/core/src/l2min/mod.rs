// SPDX-License-Identifier: MIT OR Apache-2.0
//! The minimal L² integral `G(t; c)` over truncated monomial bases.
//!
//! Basis functions are tensor products of `z_j^{k}` with `k ∈ 0..=N_j` on a
//! disc factor and `k ∈ −N_j..=N_j` on an annulus factor, ordered row-major
//! (last factor fastest).  Gram entries carry the `2ⁿ` form-norm factor.

mod factor;
mod solve;

use crate::error::{Error, Result};
use crate::gain::GainFunction;
use crate::numerics::{adaptive_gk_rule, adaptive_smooth_rule};
use crate::weights::{degree_bound, enumerate_e, FactorSpec, JetGerm, MultiIndex, Perturbation, WeightSpec};
use factor::FactorIntegrator;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;

const S_REL_TOL: f64 = 1e-8;
const S_MAX_DEPTH: usize = 30;
const S_TAIL: f64 = 1e-11;
const S_MAX_SPAN: f64 = 400.0;

const S_UNIT_PANELS: usize = 8;

/// Edges of the fixed `s` partition: unit panels up to 8, then the width
/// doubles every eight panels.
fn panel_edge(i: usize) -> f64 {
    let mut e = 0.0;
    for k in 0..i {
        e += 2f64.powi((k / S_UNIT_PANELS) as i32);
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    degrees: Vec<usize>,
}

impl BasisSpec {
    pub fn new(degrees: Vec<usize>) -> Self {
        Self { degrees }
    }

    pub fn uniform(n_factors: usize, degree: usize) -> Self {
        Self { degrees: vec![degree; n_factors] }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Exponents of factor `j`: `0..=N` on a disc, `−N..=N` on an annulus.
    pub fn exponents(&self, j: usize, f: &FactorSpec) -> Vec<i32> {
        let n = self.degrees[j] as i32;
        if f.surface.is_disc() {
            (0..=n).collect()
        } else {
            (-n..=n).collect()
        }
    }
}

/// One jet constraint: the coefficient of `w^α` at base point `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetConstraint {
    pub beta: Vec<usize>,
    pub alpha: MultiIndex,
    pub target: Complex64,
}

/// Weights, gain, prescribed germs and basis truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Problem {
    weights: WeightSpec,
    gain: GainFunction,
    germs: Vec<JetGerm>,
    basis: BasisSpec,
}

impl L2Problem {
    pub fn new(weights: WeightSpec, gain: GainFunction, germs: Vec<JetGerm>, basis: BasisSpec) -> Result<Self> {
        let n = weights.n();
        if basis.degrees.len() != n {
            return Err(Error::Config(format!("basis has {} factors, weights have {n}", basis.degrees.len())));
        }
        for (i, g) in germs.iter().enumerate() {
            if g.base.len() != n || g.base.iter().zip(weights.factors()).any(|(&k, f)| k >= f.points.len()) {
                return Err(Error::Config(format!("germ {i} refers to a missing base point {:?}", g.base)));
            }
            if germs[..i].iter().any(|o| o.base == g.base) {
                return Err(Error::Config(format!("two germs at base point {:?}", g.base)));
            }
            if g.support().any(|a| a.len() != n) {
                return Err(Error::Config(format!("germ {i} has a multi-index of the wrong length")));
            }
        }
        let p = Self { weights, gain, germs, basis };
        let mut need = vec![0u32; n];
        for c in p.constraints() {
            for (j, &a) in c.alpha.iter().enumerate() {
                need[j] = need[j].max(a);
            }
        }
        for (j, (&deg, &nd)) in p.basis.degrees.iter().zip(&need).enumerate() {
            if (deg as u32) < nd + 4 {
                return Err(Error::Config(format!("basis degree {deg} on factor {j} is below the constrained degree {nd} + 4")));
            }
        }
        Ok(p)
    }

    pub fn weights(&self) -> &WeightSpec {
        &self.weights
    }

    pub fn gain(&self) -> &GainFunction {
        &self.gain
    }

    pub fn germs(&self) -> &[JetGerm] {
        &self.germs
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn germ_at(&self, beta: &[usize]) -> Option<&JetGerm> {
        self.germs.iter().find(|g| g.base == beta)
    }

    pub fn with_basis(&self, basis: BasisSpec) -> Result<Self> {
        Self::new(self.weights.clone(), self.gain.clone(), self.germs.clone(), basis)
    }

    pub fn with_germs(&self, germs: Vec<JetGerm>) -> Result<Self> {
        Self::new(self.weights.clone(), self.gain.clone(), germs, self.basis.clone())
    }

    pub fn with_gain(&self, gain: GainFunction) -> Result<Self> {
        Self::new(self.weights.clone(), gain, self.germs.clone(), self.basis.clone())
    }

    /// All jet constraints: every sub-ideal index at every base point.
    pub fn constraints(&self) -> Vec<JetConstraint> {
        let mut out = Vec::new();
        for beta in self.weights.base_points() {
            let p = self.weights.base_masses(&beta);
            let (_, sub) = enumerate_e(&p, degree_bound(&p));
            let germ = self.germ_at(&beta);
            for alpha in sub.indices() {
                let target = germ.map_or(Complex64::new(0.0, 0.0), |g| g.get(alpha));
                out.push(JetConstraint { beta: beta.clone(), alpha: alpha.clone(), target });
            }
        }
        out
    }
}

/// Gram matrix of the tensor basis on `{ψ < −t}`.
#[derive(Debug, Clone)]
pub enum GramMatrix {
    /// `scale · ⊗_j factors[j]`.
    Kronecker {
        scale: f64,
        factors: Vec<CMat>,
    },
    Dense(CMat),
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GramMatrix::Kronecker { factors, .. } => factors.iter().map(|f| f.nrows()).product(),
            GramMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            GramMatrix::Kronecker { scale, factors } => {
                let mut m = CMat::from_element(1, 1, Complex64::new(*scale, 0.0));
                for f in factors {
                    m = m.kronecker(f);
                }
                m
            }
            GramMatrix::Dense(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub dim: usize,
    pub rank: usize,
    pub cond: f64,
    pub constraint_residual: f64,
    pub n_constraints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerResult {
    pub value: f64,
    /// Coefficients over the tensor basis, row-major.
    pub coefficients: Vec<Complex64>,
    pub diagnostics: Diagnostics,
}

/// Reusable solver: caches per-factor region integrals across `t`.
pub struct L2Solver {
    problem: L2Problem,
    factors: Vec<FactorIntegrator>,
    psi0: f64,
    panels: Mutex<HashMap<usize, Arc<Rule>>>,
}

type Rule = Vec<(f64, f64)>;

impl L2Solver {
    pub fn new(problem: &L2Problem) -> Result<Self> {
        let psi0 = match problem.weights.perturbation() {
            Perturbation::None => 0.0,
            Perturbation::Constant(c) => *c,
            Perturbation::MaxGreen(_) => {
                return Err(Error::Unsupported("minimal integrals with a max-Green perturbation are not implemented".into()))
            }
        };
        let factors =
            problem.weights.factors().iter().enumerate().map(|(j, f)| FactorIntegrator::new(f, problem.basis.exponents(j, f))).collect();
        Ok(Self { problem: problem.clone(), factors, psi0, panels: Mutex::new(HashMap::new()) })
    }

    pub fn problem(&self) -> &L2Problem {
        &self.problem
    }

    /// Exponent lists per factor.
    pub fn exponents(&self) -> Vec<Vec<i32>> {
        self.factors.iter().map(|f| f.exps().to_vec()).collect()
    }

    fn threshold(&self, t: f64) -> f64 {
        (t + self.psi0).max(0.0)
    }

    fn big_c(&self, s: f64) -> f64 {
        self.problem.gain.c(s - self.psi0)
    }

    fn big_dc(&self, s: f64) -> f64 {
        self.problem.gain.dc(s - self.psi0)
    }

    fn regions(&self, s: f64) -> Result<Vec<Arc<CMat>>> {
        self.factors.iter().map(|f| f.region(s)).collect()
    }

    fn region_proxy(&self, s: f64) -> Result<f64> {
        let mut p = 1.0;
        for f in &self.factors {
            p *= f.proxy(&*f.region(s)?);
        }
        Ok(p)
    }

    pub fn gram_matrix(&self, t: f64) -> Result<GramMatrix> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("t must be ≥ 0, got {t}")));
        }
        let n = self.factors.len() as i32;
        let a = self.threshold(t);
        let two_n = 2f64.powi(n);
        if self.problem.gain.is_constant() {
            let factors = self.regions(a)?.iter().map(|m| (**m).clone()).collect();
            return Ok(GramMatrix::Kronecker { scale: two_n * self.big_c(a), factors });
        }
        let rule = self.s_rule(a)?;
        let kron = |mats: &[Arc<CMat>]| {
            let mut m = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
            for f in mats {
                m = m.kronecker(&**f);
            }
            m
        };
        let mut g = kron(&self.regions(a)?) * Complex64::new(self.big_c(a), 0.0);
        for &(s, w) in &rule {
            let c = w * self.big_dc(s);
            if c != 0.0 {
                g += kron(&self.regions(s)?) * Complex64::new(c, 0.0);
            }
        }
        g *= Complex64::new(two_n, 0.0);
        Ok(GramMatrix::Dense(g))
    }

    /// Quadrature nodes for `∫_a^∞ C'(s) ⊗A_j(s) ds`: a partial panel up to
    /// the next edge of [`panel_edge`], then cached panels until the tail is
    /// negligible.
    fn s_rule(&self, a: f64) -> Result<Vec<(f64, f64)>> {
        let breaks: Vec<f64> = self.problem.gain.breakpoints().iter().map(|b| b + self.psi0).collect();
        let last_break = breaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let critical: Vec<f64> = self.factors.iter().flat_map(|f| f.critical_levels()).collect();
        let mut total = self.big_c(a) * self.region_proxy(a)?;
        let mut nodes = Vec::new();
        let mut i = 0;
        while panel_edge(i + 1) <= a {
            i += 1;
        }
        if a > panel_edge(i) {
            let panel = self.panel_rule(a, panel_edge(i + 1), &breaks, &critical)?;
            total += self.rule_size(&panel)?;
            nodes.extend(panel);
            i += 1;
        }
        loop {
            let cached = self.panels.lock().expect("panel cache poisoned").get(&i).cloned();
            let panel = match cached {
                Some(p) => p,
                None => {
                    let p = Arc::new(self.panel_rule(panel_edge(i), panel_edge(i + 1), &breaks, &critical)?);
                    self.panels.lock().expect("panel cache poisoned").insert(i, p.clone());
                    p
                }
            };
            let size = self.rule_size(&panel)?;
            total += size;
            nodes.extend(panel.iter().cloned());
            i += 1;
            let k = panel_edge(i);
            if (k > last_break && size <= S_TAIL * total) || k > a + S_MAX_SPAN {
                break;
            }
        }
        Ok(nodes)
    }

    fn panel_rule(&self, lo: f64, hi: f64, breaks: &[f64], critical: &[f64]) -> Result<Vec<(f64, f64)>> {
        let mut b = vec![lo, hi];
        b.extend(breaks.iter().chain(critical).cloned().filter(|&x| x > lo && x < hi));
        b.sort_by(f64::total_cmp);
        let f = |s: f64| Ok(self.big_dc(s).abs() * self.region_proxy(s)?);
        let singular = critical.iter().any(|&x| x >= lo && x <= hi);
        let rule =
            if singular { adaptive_smooth_rule(&b, S_REL_TOL, S_MAX_DEPTH, f)? } else { adaptive_gk_rule(&b, S_REL_TOL, S_MAX_DEPTH, f)? };
        Ok(rule.nodes)
    }

    fn rule_size(&self, nodes: &[(f64, f64)]) -> Result<f64> {
        let mut acc = 0.0;
        for &(s, w) in nodes {
            acc += w * self.big_dc(s).abs() * self.region_proxy(s)?;
        }
        Ok(acc)
    }

    fn constraint_rows(&self) -> (Vec<Vec<Vec<Complex64>>>, Vec<Complex64>) {
        let w = &self.problem.weights;
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for c in self.problem.constraints() {
            let z = w.base_coords(&c.beta);
            let per: Vec<Vec<Complex64>> = self.factors.iter().enumerate().map(|(j, f)| f.jet_row(z[j], c.alpha[j])).collect();
            rows.push(per);
            b.push(c.target);
        }
        (rows, b)
    }

    pub fn minimal_l2(&self, t: f64) -> Result<MinimizerResult> {
        let gram = self.gram_matrix(t)?;
        let (rows, b) = self.constraint_rows();
        let dim = gram.dim();
        let n_constraints = rows.len();
        match gram {
            GramMatrix::Kronecker { scale, factors } => {
                let whs = factors.iter().map(solve::whiten).collect::<Result<Vec<_>>>()?;
                let ranks: Vec<usize> = whs.iter().map(|w| w.w.ncols()).collect();
                let rank: usize = ranks.iter().product();
                let mut m = CMat::zeros(n_constraints, rank);
                for (i, per) in rows.iter().enumerate() {
                    let proj: Vec<Vec<Complex64>> = per
                        .iter()
                        .zip(&whs)
                        .map(|(r, w)| {
                            let rv = nalgebra::RowDVector::from_row_slice(r);
                            (rv * &w.w).iter().cloned().collect()
                        })
                        .collect();
                    for (c, v) in solve::kron_rows(&proj).into_iter().enumerate() {
                        m[(i, c)] = v;
                    }
                }
                let (y, resid) = solve::min_norm(&m, &b)?;
                let value = scale * y.iter().map(|v| v.norm_sqr()).sum::<f64>();
                let ws: Vec<&CMat> = whs.iter().map(|w| &w.w).collect();
                let x = solve::kron_apply(&ws, &y);
                let x: Vec<Complex64> = x.iter().map(|v| v / scale.sqrt()).collect();
                let cond = whs.iter().map(|w| w.cond).product();
                Ok(MinimizerResult {
                    value,
                    coefficients: x,
                    diagnostics: Diagnostics { dim, rank, cond, constraint_residual: resid, n_constraints },
                })
            }
            GramMatrix::Dense(g) => {
                let wh = solve::whiten(&g)?;
                let rank = wh.w.ncols();
                let mut a = CMat::zeros(n_constraints, dim);
                for (i, per) in rows.iter().enumerate() {
                    for (c, v) in solve::kron_rows(per).into_iter().enumerate() {
                        a[(i, c)] = v;
                    }
                }
                let m = &a * &wh.w;
                let (y, resid) = solve::min_norm(&m, &b)?;
                let value = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
                let x = &wh.w * nalgebra::DVector::from_column_slice(&y);
                Ok(MinimizerResult {
                    value,
                    coefficients: x.iter().cloned().collect(),
                    diagnostics: Diagnostics { dim, rank, cond: wh.cond, constraint_residual: resid, n_constraints },
                })
            }
        }
    }

    /// `G(t)` on an increasing grid; checks monotone non-increase.
    pub fn g_of_t(&self, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("t grid must be strictly increasing".into()));
        }
        let vals: Vec<f64> = ts.par_iter().map(|&t| self.minimal_l2(t).map(|r| r.value)).collect::<Result<Vec<_>>>()?;
        let g0 = vals.iter().cloned().fold(0.0, f64::max);
        for i in 1..vals.len() {
            if vals[i] > vals[i - 1] + 1e-10 * g0 {
                return Err(crate::error::numeric(
                    format!("G increased between t = {} and t = {}", ts[i - 1], ts[i]),
                    vals[i] - vals[i - 1],
                ));
            }
        }
        Ok(ts.iter().cloned().zip(vals).collect())
    }
}

pub fn gram_matrix(p: &L2Problem, t: f64) -> Result<GramMatrix> {
    L2Solver::new(p)?.gram_matrix(t)
}

pub fn minimal_l2(p: &L2Problem, t: f64) -> Result<MinimizerResult> {
    L2Solver::new(p)?.minimal_l2(t)
}

pub fn g_of_t(p: &L2Problem, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    L2Solver::new(p)?.g_of_t(ts)
}

/// Relative gap between `G(t)` on the product and the sum of products of
/// one-dimensional minimal integrals over the `E`-support of the germ.
pub fn tensor_decomposition_check(p: &L2Problem, t: f64) -> Result<f64> {
    let w = p.weights();
    if !w.single_point() {
        return Err(Error::Unsupported("tensor decomposition needs one point per factor".into()));
    }
    if !p.gain().is_constant() || !matches!(w.perturbation(), Perturbation::None) {
        return Err(Error::Unsupported("tensor decomposition needs a constant gain and no perturbation".into()));
    }
    let base = vec![0; w.n()];
    let masses = w.base_masses(&base);
    let (e, _) = enumerate_e(&masses, degree_bound(&masses));
    let germ = p.germ_at(&base).cloned().unwrap_or_else(|| JetGerm::new(base.clone()));
    let lhs = minimal_l2(p, t)?.value;
    let c0 = p.gain().c(1.0);
    let mut rhs = 0.0;
    for (alpha, d) in germ.terms() {
        if crate::weights::index_in_ideal(alpha, &masses) {
            continue;
        }
        if !e.contains(alpha) {
            return Err(Error::Config(format!("germ index {alpha:?} is not on E")));
        }
        let mut prod = d.norm_sqr() * c0;
        for (j, f) in w.factors().iter().enumerate() {
            let pj = crate::weights::mass_to_f64(&f.points[0].p);
            let m = crate::weights::Mass::from_integer(alpha[j] as i64 + 1);
            let fj = FactorSpec::single(f.surface, f.points[0].z, m).with_g(f.g.clone()).with_u(f.u.clone());
            let wj = WeightSpec::new(vec![fj])?;
            let gj = JetGerm::monomial(vec![0], vec![alpha[j]], Complex64::new(1.0, 0.0));
            let pj_problem = L2Problem::new(wj, GainFunction::constant(), vec![gj], BasisSpec::new(vec![p.basis().degrees()[j]]))?;
            prod *= minimal_l2(&pj_problem, (alpha[j] as f64 + 1.0) * t / pj)?.value;
        }
        rhs += prod;
    }
    if lhs == 0.0 {
        return Ok(if rhs == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((rhs - lhs).abs() / lhs)
}
