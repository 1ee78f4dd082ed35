// SPDX-License-Identifier: MIT OR Apache-2.0
//! Product weights `ψ`, `φ`, `Ψ`, multi-index sets and jet germs.

use crate::error::{Error, Result};
use crate::surfaces::{HarmonicWeight, ModelSurface};
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Exact rational mass `p_{j,k}`.
pub type Mass = Ratio<i64>;

/// Multi-index in `ℤ₊ⁿ`.
pub type MultiIndex = Vec<u32>;

/// Parses `"a/b"`, an integer, or a finite decimal into an exact rational.
pub fn parse_mass(s: &str) -> Result<Mass> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse mass {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(a, b));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let den = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    Ok(Ratio::new(sign * num, den))
}

pub fn mass_to_f64(p: &Mass) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

/// `q_α = Σ_j (α_j+1)/p_j − 1`.
pub fn q_alpha(alpha: &[u32], p: &[Mass]) -> Mass {
    alpha.iter().zip(p).fold(-Mass::one(), |acc, (&a, pj)| acc + Mass::from_integer(a as i64 + 1) / pj)
}

/// `z^α` belongs to the multiplier ideal at a point with masses `p`.
pub fn index_in_ideal(alpha: &[u32], p: &[Mass]) -> bool {
    q_alpha(alpha, p).is_positive()
}

/// A germ belongs to the ideal iff every supported index does.
pub fn ideal_membership<'a, I: IntoIterator<Item = &'a MultiIndex>>(support: I, p: &[Mass]) -> bool {
    support.into_iter().all(|a| index_in_ideal(a, p))
}

/// Multi-indices with their exact weights `q_α`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiIndexSet {
    entries: Vec<(MultiIndex, Mass)>,
}

impl MultiIndexSet {
    pub fn from_indices(indices: Vec<MultiIndex>, p: &[Mass]) -> Self {
        let mut entries: Vec<(MultiIndex, Mass)> = Vec::new();
        for a in indices {
            if !entries.iter().any(|(b, _)| *b == a) {
                let q = q_alpha(&a, p);
                entries.push((a, q));
            }
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, a: &[u32]) -> bool {
        self.entries.iter().any(|(b, _)| b == a)
    }

    pub fn indices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.entries.iter().map(|(a, _)| a)
    }

    pub fn entries(&self) -> &[(MultiIndex, Mass)] {
        &self.entries
    }
}

/// Returns `(E, sub-ideal set)` for masses `p`, searching `α_j ≤ degree_bound`.
pub fn enumerate_e(p: &[Mass], degree_bound: u32) -> (MultiIndexSet, MultiIndexSet) {
    let mut sub = Vec::new();
    let mut cur = vec![0u32; p.len()];
    fn rec(j: usize, acc: Mass, p: &[Mass], d: u32, cur: &mut Vec<u32>, out: &mut Vec<(MultiIndex, Mass)>) {
        if j == p.len() {
            out.push((cur.clone(), acc - Mass::one()));
            return;
        }
        let rest: Mass = p[j + 1..].iter().map(|pi| pi.recip()).sum();
        for a in 0..=d {
            let next = acc + Mass::from_integer(a as i64 + 1) / p[j];
            if next + rest > Mass::one() {
                break;
            }
            cur[j] = a;
            rec(j + 1, next, p, d, cur, out);
        }
        cur[j] = 0;
    }
    rec(0, Mass::zero(), p, degree_bound, &mut cur, &mut sub);
    let e: Vec<(MultiIndex, Mass)> = sub.iter().filter(|(_, q)| q.is_zero()).cloned().collect();
    (MultiIndexSet { entries: e }, MultiIndexSet { entries: sub })
}

/// Default degree bound that makes [`enumerate_e`] complete.
pub fn degree_bound(p: &[Mass]) -> u32 {
    p.iter().map(|x| x.ceil().to_integer().max(0) as u32).max().unwrap_or(0)
}

/// A pole `z_{j,k}` with mass `p_{j,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolePoint {
    pub z: Complex64,
    pub p: Mass,
}

/// One factor of the product: surface, poles, and `φ_j = 2log|g_j| + 2u_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub surface: ModelSurface,
    pub points: Vec<PolePoint>,
    /// Coefficients of `g_j`, lowest degree first.
    pub g: Vec<Complex64>,
    pub u: HarmonicWeight,
}

impl FactorSpec {
    pub fn new(surface: ModelSurface, points: Vec<PolePoint>) -> Self {
        Self { surface, points, g: vec![Complex64::new(1.0, 0.0)], u: HarmonicWeight::zero() }
    }

    /// Single pole with mass `p`.
    pub fn single(surface: ModelSurface, z: Complex64, p: Mass) -> Self {
        Self::new(surface, vec![PolePoint { z, p }])
    }

    pub fn with_g(mut self, g: Vec<Complex64>) -> Self {
        self.g = g;
        self
    }

    pub fn with_u(mut self, u: HarmonicWeight) -> Self {
        self.u = u;
        self
    }

    /// `g` is a nonzero constant.
    pub fn g_is_constant(&self) -> bool {
        self.g.iter().skip(1).all(|c| c.norm() == 0.0)
    }

    pub fn eval_g(&self, z: Complex64) -> Complex64 {
        self.g.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// `g'(z)/g(z)`.
    pub fn dlog_g(&self, z: Complex64) -> Complex64 {
        let mut d = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        for (k, c) in self.g.iter().enumerate().skip(1) {
            d += c * k as f64 * zp;
            zp *= z;
        }
        d / self.eval_g(z)
    }

    /// `2 Σ_k p_k G(z, z_k)`.
    pub fn psi(&self, z: Complex64) -> f64 {
        let mut acc = 0.0;
        for pt in &self.points {
            acc += 2.0 * mass_to_f64(&pt.p) * self.surface.green_unchecked(z, pt.z);
        }
        acc
    }

    /// `φ_j(z) = 2 log|g(z)| + 2 u(z)`.
    pub fn phi(&self, z: Complex64) -> f64 {
        2.0 * self.eval_g(z).norm().ln() + 2.0 * self.u.eval(z)
    }

    /// The weight `e^{-φ_j}` depends only on `|z|`.
    pub fn weight_is_radial(&self) -> bool {
        self.g_is_constant() && self.u.is_radial()
    }

    /// `c_{j,k}`: capacity of the weighted Green sum at `z_k`.
    pub fn point_capacity(&self, k: usize) -> Result<f64> {
        let pt = self.points.get(k).ok_or_else(|| Error::Config(format!("no point with index {k}")))?;
        let mut lc = self.surface.log_capacity(pt.z)?;
        let pk = mass_to_f64(&pt.p);
        for (k1, o) in self.points.iter().enumerate() {
            if k1 != k {
                lc += mass_to_f64(&o.p) / pk * self.surface.green_unchecked(pt.z, o.z);
            }
        }
        Ok(lc.exp())
    }

    fn validate(&self, j: usize) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Config(format!("factor {j} has no points")));
        }
        for (k, pt) in self.points.iter().enumerate() {
            self.surface
                .check_interior(pt.z)
                .map_err(|_| Error::Config(format!("factor {j} point {k} = {} lies outside {}", pt.z, self.surface)))?;
            if !pt.p.is_positive() {
                return Err(Error::Config(format!("factor {j} point {k} has non-positive mass")));
            }
            for o in &self.points[..k] {
                if (o.z - pt.z).norm() < 1e-12 {
                    return Err(Error::Config(format!("factor {j} has coincident points at {}", pt.z)));
                }
            }
        }
        self.u.validate(&self.surface)?;
        validate_nonvanishing(&self.g, &self.surface).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("factor {j}: {m}")),
            other => other,
        })
    }
}

/// `g` has no zeros on the closure of the surface (argument principle).
fn validate_nonvanishing(g: &[Complex64], s: &ModelSurface) -> Result<()> {
    if g.is_empty() || g.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::Config("holomorphic factor g is identically zero".into()));
    }
    if g.iter().any(|c| !c.is_finite()) {
        return Err(Error::Config("holomorphic factor g has non-finite coefficients".into()));
    }
    let eval = |z: Complex64| g.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let scale: f64 = g.iter().map(|c| c.norm()).sum();
    let winding = |rho: f64| -> Result<i64> {
        let n = 4096 * g.len().max(1);
        let mut total = 0.0;
        let mut prev = eval(Complex64::new(rho, 0.0));
        for i in 1..=n {
            let z = Complex64::from_polar(rho, 2.0 * PI * i as f64 / n as f64);
            let cur = eval(z);
            if cur.norm() <= 1e-12 * scale {
                return Err(Error::Config(format!("g vanishes on |z| = {rho}")));
            }
            total += (cur / prev).arg();
            prev = cur;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    };
    let outer = winding(1.0)?;
    let inner = if s.is_disc() { 0 } else { winding(s.inner_radius())? };
    if outer != inner {
        return Err(Error::Config(format!("g has {} zero(s) on the surface", outer - inner)));
    }
    Ok(())
}

/// Plurisubharmonic perturbation `Ψ ≤ 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Perturbation {
    #[default]
    None,
    /// `Ψ ≡ c` with `c ≤ 0`.
    Constant(f64),
    /// `Ψ(z) = max_j λ_j G_j(z_j, a_j)` over the factors that carry a term.
    MaxGreen(Vec<Option<(f64, Complex64)>>),
}

/// The full weight data on a product of model surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    factors: Vec<FactorSpec>,
    perturbation: Perturbation,
}

impl WeightSpec {
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        Self::with_perturbation(factors, Perturbation::None)
    }

    pub fn with_perturbation(factors: Vec<FactorSpec>, perturbation: Perturbation) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Config("at least one factor is required".into()));
        }
        for (j, f) in factors.iter().enumerate() {
            f.validate(j)?;
        }
        match &perturbation {
            Perturbation::None => {}
            Perturbation::Constant(c) => {
                if !(c.is_finite() && *c <= 0.0) {
                    return Err(Error::Config(format!("constant perturbation must be finite and ≤ 0, got {c}")));
                }
            }
            Perturbation::MaxGreen(terms) => {
                if terms.len() != factors.len() || terms.iter().all(Option::is_none) {
                    return Err(Error::Config("max-Green perturbation needs one optional term per factor".into()));
                }
                for (f, t) in factors.iter().zip(terms) {
                    if let Some((l, a)) = t {
                        if !(l.is_finite() && *l >= 0.0) {
                            return Err(Error::Config("max-Green coefficients must be ≥ 0".into()));
                        }
                        f.surface.check_interior(*a).map_err(|_| Error::Config(format!("perturbation pole {a} outside surface")))?;
                    }
                }
            }
        }
        Ok(Self { factors, perturbation })
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn factor(&self, j: usize) -> &FactorSpec {
        &self.factors[j]
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn single_point(&self) -> bool {
        self.factors.iter().all(|f| f.points.len() == 1)
    }

    fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.n() {
            return Err(Error::Domain(format!("expected {} coordinates, got {}", self.n(), z.len())));
        }
        for (f, zj) in self.factors.iter().zip(z) {
            f.surface.check_interior(*zj)?;
        }
        Ok(())
    }

    /// `Ψ(z)`.
    pub fn eval_perturbation(&self, z: &[Complex64]) -> f64 {
        match &self.perturbation {
            Perturbation::None => 0.0,
            Perturbation::Constant(c) => *c,
            Perturbation::MaxGreen(terms) => terms
                .iter()
                .zip(&self.factors)
                .zip(z)
                .filter_map(|((t, f), zj)| t.map(|(l, a)| l * f.surface.green_unchecked(*zj, a)))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `ψ(z) + Ψ(z)`.
    pub fn eval_psi(&self, z: &[Complex64]) -> Result<f64> {
        self.check_point(z)?;
        let m = self.factors.iter().zip(z).map(|(f, zj)| f.psi(*zj)).fold(f64::NEG_INFINITY, f64::max);
        Ok(m + self.eval_perturbation(z))
    }

    /// `φ(z) = Σ_j φ_j(z_j)`.
    pub fn eval_phi(&self, z: &[Complex64]) -> Result<f64> {
        self.check_point(z)?;
        Ok(self.factors.iter().zip(z).map(|(f, zj)| f.phi(*zj)).sum())
    }

    pub fn point_capacity(&self, j: usize, k: usize) -> Result<f64> {
        self.factors.get(j).ok_or_else(|| Error::Config(format!("no factor {j}")))?.point_capacity(k)
    }

    /// All base points `β`, in row-major order.
    pub fn base_points(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for f in &self.factors {
            let mut next = Vec::with_capacity(out.len() * f.points.len());
            for b in &out {
                for k in 0..f.points.len() {
                    let mut nb = b.clone();
                    nb.push(k);
                    next.push(nb);
                }
            }
            out = next;
        }
        out
    }

    pub fn base_coords(&self, beta: &[usize]) -> Vec<Complex64> {
        beta.iter().zip(&self.factors).map(|(&k, f)| f.points[k].z).collect()
    }

    pub fn base_masses(&self, beta: &[usize]) -> Vec<Mass> {
        beta.iter().zip(&self.factors).map(|(&k, f)| f.points[k].p).collect()
    }

    /// `max_j 2n G_j(z_j, base_j)` for one point per factor.
    pub fn pluricomplex_green(&self, z: &[Complex64]) -> Result<f64> {
        if !self.single_point() {
            return Err(Error::Unsupported("pluricomplex Green function needs one point per factor".into()));
        }
        let surfaces: Vec<ModelSurface> = self.factors.iter().map(|f| f.surface).collect();
        let base: Vec<Complex64> = self.factors.iter().map(|f| f.points[0].z).collect();
        pluricomplex_green(&surfaces, &base, z)
    }
}

/// `max_j 2n G_j(z_j, base_j)`.
pub fn pluricomplex_green(surfaces: &[ModelSurface], base: &[Complex64], z: &[Complex64]) -> Result<f64> {
    let n = surfaces.len();
    if base.len() != n || z.len() != n {
        return Err(Error::Domain("coordinate count mismatch".into()));
    }
    let mut m = f64::NEG_INFINITY;
    for j in 0..n {
        m = m.max(2.0 * n as f64 * surfaces[j].green(z[j], base[j])?);
    }
    Ok(m)
}

/// Germ `(Σ d_α w^α) dw₁∧…∧dw_n` at base point `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetGerm {
    pub base: Vec<usize>,
    coeffs: BTreeMap<MultiIndex, Complex64>,
}

impl JetGerm {
    pub fn new(base: Vec<usize>) -> Self {
        Self { base, coeffs: BTreeMap::new() }
    }

    pub fn monomial(base: Vec<usize>, alpha: MultiIndex, d: Complex64) -> Self {
        Self::new(base).with(alpha, d)
    }

    pub fn with(mut self, alpha: MultiIndex, d: Complex64) -> Self {
        self.set(alpha, d);
        self
    }

    pub fn set(&mut self, alpha: MultiIndex, d: Complex64) {
        if d.norm() == 0.0 {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, d);
        }
    }

    pub fn get(&self, alpha: &[u32]) -> Complex64 {
        self.coeffs.get(alpha).copied().unwrap_or_default()
    }

    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> {
        self.coeffs.keys()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut g = Self::new(self.base.clone());
        for (a, d) in &self.coeffs {
            g.set(a.clone(), d * s);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(a: i64, b: i64) -> Mass {
        Ratio::new(a, b)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn parses_masses() {
        assert_eq!(parse_mass("0.7").unwrap(), m(7, 10));
        assert_eq!(parse_mass("3/4").unwrap(), m(3, 4));
        assert_eq!(parse_mass("2").unwrap(), m(2, 1));
        assert_eq!(parse_mass("-.5").unwrap(), m(-1, 2));
        assert!(parse_mass("1/0").is_err());
        assert!(parse_mass("x").is_err());
    }

    #[test]
    fn psi_examples() {
        let d = ModelSurface::disc();
        let w = WeightSpec::new(vec![FactorSpec::single(d, c(0.0), m(2, 1)), FactorSpec::single(d, c(0.0), m(2, 1))]).unwrap();
        let v = w.eval_psi(&[c(0.5), c(0.1)]).unwrap();
        assert!((v - 4.0 * 0.5f64.ln()).abs() < 1e-14);
        assert!((v + 2.772_588_7).abs() < 1e-7);
        assert_eq!(w.eval_psi(&[c(0.1), c(0.5)]).unwrap(), v);
        assert_eq!(w.eval_psi(&[c(0.0), c(0.0)]).unwrap(), f64::NEG_INFINITY);

        let a = ModelSurface::annulus(0.5).unwrap();
        let w = WeightSpec::new(vec![FactorSpec::single(a, c(0.7), m(1, 1)), FactorSpec::single(d, c(0.0), m(1, 1))]).unwrap();
        let v = w.eval_psi(&[c(0.71), c(0.5)]).unwrap();
        let ga = 2.0 * a.green(c(0.71), c(0.7)).unwrap();
        assert_eq!(v, ga.max(2.0 * 0.5f64.ln()));
    }

    #[test]
    fn membership_examples() {
        assert!(!index_in_ideal(&[0, 0], &[m(2, 1), m(2, 1)]));
        assert!(index_in_ideal(&[1, 0], &[m(2, 1), m(2, 1)]));
        assert!(index_in_ideal(&[0], &[m(1, 2)]));
    }

    #[test]
    fn enumerate_examples() {
        let (e, sub) = enumerate_e(&[m(2, 1), m(2, 1)], 2);
        assert_eq!(e.indices().cloned().collect::<Vec<_>>(), vec![vec![0, 0]]);
        assert_eq!(sub.len(), 1);
        let (e, _) = enumerate_e(&[m(4, 1), m(4, 1)], 4);
        let mut got: Vec<_> = e.indices().cloned().collect();
        got.sort();
        assert_eq!(got, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let (e, sub) = enumerate_e(&[m(1, 1), m(1, 1)], 1);
        assert!(e.is_empty() && sub.is_empty());
    }

    #[test]
    fn point_capacities() {
        let d = ModelSurface::disc();
        let f = FactorSpec::single(d, c(0.0), m(3, 1));
        assert!((f.point_capacity(0).unwrap() - 1.0).abs() < 1e-15);
        let f = FactorSpec::new(d, vec![PolePoint { z: c(0.0), p: m(1, 1) }, PolePoint { z: c(0.5), p: m(1, 1) }]);
        assert!((f.point_capacity(0).unwrap() - 0.5).abs() < 1e-14);
        let a = ModelSurface::annulus(0.5).unwrap();
        let f = FactorSpec::single(a, c(0.7), m(1, 1));
        assert!((f.point_capacity(0).unwrap() - a.capacity(c(0.7)).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn pluricomplex_examples() {
        let d = ModelSurface::disc();
        let v = pluricomplex_green(&[d, d], &[c(0.0), c(0.0)], &[c(0.5), c(0.1)]).unwrap();
        assert!((v - 4.0 * 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(pluricomplex_green(&[d], &[c(0.2)], &[c(0.2)]).unwrap(), f64::NEG_INFINITY);
        let v = pluricomplex_green(&[d], &[c(0.0)], &[c(0.3)]).unwrap();
        assert!((v - 2.0 * 0.3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        let d = ModelSurface::disc();
        let a = ModelSurface::annulus(0.5).unwrap();
        assert!(WeightSpec::new(vec![FactorSpec::single(d, c(1.2), m(1, 1))]).is_err());
        assert!(WeightSpec::new(vec![FactorSpec::single(d, c(0.1), m(0, 1))]).is_err());
        assert!(WeightSpec::new(vec![FactorSpec::single(d, c(0.1), m(1, 1)).with_g(vec![c(-0.5), c(1.0)])]).is_err());
        assert!(WeightSpec::new(vec![FactorSpec::single(d, c(0.1), m(1, 1)).with_g(vec![c(-2.0), c(1.0)])]).is_ok());
        assert!(WeightSpec::new(vec![FactorSpec::single(a, c(0.7), m(1, 1)).with_g(vec![c(0.0), c(1.0)])]).is_ok());
        assert!(WeightSpec::new(vec![FactorSpec::single(a, c(0.7), m(1, 1)).with_g(vec![c(-0.6), c(1.0)])]).is_err());
        let pts = vec![PolePoint { z: c(0.1), p: m(1, 1) }, PolePoint { z: c(0.1), p: m(1, 1) }];
        assert!(WeightSpec::new(vec![FactorSpec::new(d, pts)]).is_err());
        assert!(WeightSpec::with_perturbation(vec![FactorSpec::single(d, c(0.0), m(1, 1))], Perturbation::Constant(0.5)).is_err());
    }

    proptest! {
        #[test]
        fn psi_non_positive(x in -0.95f64..0.95, y in -0.95f64..0.95, x2 in -0.6f64..0.6) {
            let d = ModelSurface::disc();
            let a = ModelSurface::annulus(0.3).unwrap();
            let w = WeightSpec::new(vec![
                FactorSpec::new(d, vec![PolePoint { z: c(0.0), p: m(1, 1) }, PolePoint { z: c(0.5), p: m(1, 2) }]),
                FactorSpec::single(a, c(0.6), m(2, 1)),
            ]).unwrap();
            let z2 = Complex64::new(0.65 + x2 / 3.0, x2 / 3.0);
            let z1 = Complex64::new(x, y);
            if z1.norm() < 1.0 {
                prop_assert!(w.eval_psi(&[z1, z2]).unwrap() <= 0.0);
            }
        }

        #[test]
        fn membership_monotone(a in proptest::collection::vec(0u32..6, 2), j in 0usize..2,
                               p1 in 1i64..13, q1 in 1i64..13, p2 in 1i64..13, q2 in 1i64..13) {
            let p = [m(p1, q1), m(p2, q2)];
            let mut b = a.clone();
            b[j] += 1;
            if index_in_ideal(&a, &p) {
                prop_assert!(index_in_ideal(&b, &p));
            }
        }

        #[test]
        fn enumerated_sets_are_exact(p1 in 1i64..25, q1 in 1i64..7, p2 in 1i64..25, q2 in 1i64..7) {
            let p = [m(p1, q1), m(p2, q2)];
            let (e, sub) = enumerate_e(&p, degree_bound(&p));
            for (a, q) in e.entries() {
                prop_assert!(q.is_zero());
                prop_assert!(sub.contains(a));
            }
            for (a, q) in sub.entries() {
                prop_assert!(*q <= Mass::zero());
                prop_assert_eq!(*q, q_alpha(a, &p));
            }
        }
    }
}
