// SPDX-License-Identifier: MIT OR Apache-2.0
//! Bergman kernels on the model surfaces and the Suita, extended Suita and
//! Ohsawa comparisons.
//!
//! Kernel values are coefficients against `dw ⊗ dw̄` (or the product frame)
//! at the evaluation point.  Norms are Lebesgue norms; the factor `2ⁿ` of
//! the form norm cancels in the kernel coefficient.

use crate::closedforms::shell_integral;
use crate::error::{Error, Result};
use crate::numerics::{CompensatedSum, GaussLegendre};
use crate::surfaces::{HarmonicWeight, ModelSurface, SurfaceKind, CHARACTER_TOL};
use crate::weights::{FactorSpec, Mass, PolePoint, WeightSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Series terms below this fraction of the running sum end the summation.
const SERIES_EPS: f64 = 1e-17;
/// Relative gap below which the two sides of a Suita comparison count as equal.
pub const SUITA_EQUALITY_TOL: f64 = 1e-9;
/// Relative tolerance for the Ohsawa equality verdict.
pub const OHSAWA_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub b: f64,
    /// Basis functions used.
    pub terms: usize,
    /// Bound on the neglected part of the series, relative to `b`.
    pub tail: f64,
    /// Condition number of the Gram matrix when one was inverted.
    pub cond: Option<f64>,
}

/// `‖z^m‖²` for `ρ = e^{-2u}` with radial `u = κ log|z| + u₀`.
fn radial_norm(s: &ModelSurface, m: i64, kappa: f64, u0: f64) -> f64 {
    let e = 2.0 * m as f64 + 2.0 - 2.0 * kappa;
    let inner = s.inner_radius();
    let base = if e.abs() < 1e-14 {
        2.0 * PI * (1.0 / inner).ln()
    } else if inner == 0.0 {
        2.0 * PI / e
    } else {
        // (1 − r^e)/e, written to stay accurate for either sign of e
        2.0 * PI * -(e * inner.ln()).exp_m1() / e
    };
    (-2.0 * u0).exp() * base
}

fn check_radial(s: &ModelSurface, z: Complex64, u: Option<&HarmonicWeight>) -> Result<(f64, f64)> {
    s.check_interior(z)?;
    let u = match u {
        None => return Ok((0.0, 0.0)),
        Some(u) => u,
    };
    u.validate(s)?;
    if !u.is_radial() {
        return Err(Error::Unsupported("series kernel needs a radial weight".into()));
    }
    Ok((u.kappa, u.radial_constant()))
}

/// `K(z, ζ) = Σ_m z^m ζ̄^m / ‖z^m‖²` for a radial weight.
pub fn kernel_function(s: &ModelSurface, z: Complex64, zeta: Complex64, u: Option<&HarmonicWeight>) -> Result<Complex64> {
    let (kappa, u0) = check_radial(s, z, u)?;
    s.check_interior(zeta)?;
    let x = z * zeta.conj();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut sweep = |dir: i64, start: i64| {
        let mut m = start;
        let mut small = 0;
        loop {
            let term = x.powi(m as i32) / radial_norm(s, m, kappa, u0);
            acc += term;
            small = if term.norm() <= SERIES_EPS * acc.norm() { small + 1 } else { 0 };
            if small >= 4 || m.abs() > 20_000 {
                break;
            }
            m += dir;
        }
    };
    sweep(1, 0);
    if !s.is_disc() {
        sweep(-1, -1);
    }
    Ok(acc)
}

/// `B(z) = Σ |e(z)|²` over a `ρ`-orthonormal basis.
///
/// Radial weights use the diagonal monomial or Laurent series; other
/// weights fall back to a Gram matrix on a truncated basis.
pub fn bergman_kernel(s: &ModelSurface, z: Complex64, u: Option<&HarmonicWeight>) -> Result<KernelValue> {
    if u.is_some_and(|u| !u.is_radial()) {
        return gram_kernel(s, z, u, 48);
    }
    let (kappa, u0) = check_radial(s, z, u)?;
    let a2 = z.norm_sqr();
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    let mut tail = 0.0;
    let mut sweep = |dir: i64, start: i64, ratio: f64| {
        let mut m = start;
        let mut last;
        loop {
            last = a2.powi(m as i32) / radial_norm(s, m, kappa, u0);
            acc.add(last);
            terms += 1;
            if (last <= SERIES_EPS * acc.value() && m.abs() > 2) || m.abs() > 20_000 {
                break;
            }
            m += dir;
        }
        // terms decay at least geometrically with this ratio once past the peak
        tail += last * 2.0 * ratio / (1.0 - ratio).max(1e-300);
    };
    sweep(1, 0, a2);
    if let SurfaceKind::Annulus { r } = s.kind() {
        sweep(-1, -1, r * r / a2);
    }
    let b = acc.value();
    if !(b > 0.0 && b.is_finite()) {
        return Err(crate::error::numeric("kernel series did not produce a positive value", b));
    }
    Ok(KernelValue { b, terms, tail: tail / b, cond: None })
}

/// Per-factor Gram matrix `∫ z^a z̄^b ρ dλ` on monomials (disc) or Laurent
/// monomials (annulus) of degree at most `degree`, by polar quadrature.
fn factor_gram(s: &ModelSurface, u: Option<&HarmonicWeight>, degree: usize) -> (Vec<i32>, DMatrix<Complex64>) {
    let exps: Vec<i32> = if s.is_disc() { (0..=degree as i32).collect() } else { (-(degree as i32)..=degree as i32).collect() };
    let n = exps.len();
    let inner = s.inner_radius();
    let angles = 4 * degree + 64;
    let panels = 8;
    let gl = GaussLegendre::cached(32);
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    // ∫ z^a z̄^b ρ = Σ_nodes ρ(z) ρ^{a+b+1}·e^{i(a−b)θ}
    for p in 0..panels {
        let lo = inner + (1.0 - inner) * p as f64 / panels as f64;
        let hi = inner + (1.0 - inner) * (p + 1) as f64 / panels as f64;
        for (rad, wr) in gl.mapped(lo, hi) {
            for i in 0..angles {
                let th = 2.0 * PI * i as f64 / angles as f64;
                let z = Complex64::from_polar(rad, th);
                let rho = u.map_or(1.0, |u| (-2.0 * u.eval(z)).exp());
                let wt = wr * rad * rho * 2.0 * PI / angles as f64;
                let pw: Vec<Complex64> = exps.iter().map(|&e| z.powi(e)).collect();
                for a in 0..n {
                    for b in a..n {
                        g[(a, b)] += pw[a] * pw[b].conj() * wt;
                    }
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            g[(a, b)] = g[(b, a)].conj();
        }
    }
    (exps, g)
}

/// `x* G⁻¹ x` after diagonal scaling, with the condition number.
fn quadratic_inverse(g: &DMatrix<Complex64>, x: &[Complex64]) -> Result<(f64, f64)> {
    let n = g.nrows();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / g[(i, i)].re.sqrt()).collect();
    let h = DMatrix::from_fn(n, n, |a, b| g[(a, b)] * d[a] * d[b]);
    let xs = DVector::from_fn(n, |a, _| x[a] * d[a]);
    let eig = h.clone().symmetric_eigen();
    let (lmin, lmax) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let chol = h.cholesky().ok_or_else(|| crate::error::numeric("Gram matrix is not positive definite", lmin))?;
    let y = chol.solve(&xs);
    Ok((xs.dotc(&y).re, lmax / lmin))
}

/// Kernel from a Gram matrix on a truncated basis; handles any weight.
pub fn gram_kernel(s: &ModelSurface, z: Complex64, u: Option<&HarmonicWeight>, degree: usize) -> Result<KernelValue> {
    s.check_interior(z)?;
    if let Some(u) = u {
        u.validate(s)?;
    }
    let (exps, g) = factor_gram(s, u, degree);
    let x: Vec<Complex64> = exps.iter().map(|&e| z.powi(e)).collect();
    let (b, cond) = quadratic_inverse(&g, &x)?;
    Ok(KernelValue { b, terms: exps.len(), tail: f64::NAN, cond: Some(cond) })
}

/// Kernel of a product from one dense Gram matrix on the tensor basis.
pub fn product_kernel_gram(surfaces: &[ModelSurface], z: &[Complex64], degree: usize) -> Result<KernelValue> {
    if surfaces.len() != z.len() || surfaces.is_empty() {
        return Err(Error::Domain("one coordinate per factor is required".into()));
    }
    let mut g = DMatrix::<Complex64>::from_element(1, 1, Complex64::new(1.0, 0.0));
    let mut x = vec![Complex64::new(1.0, 0.0)];
    for (s, zj) in surfaces.iter().zip(z) {
        s.check_interior(*zj)?;
        let (exps, gj) = factor_gram(s, None, degree);
        g = g.kronecker(&gj);
        x = x.iter().flat_map(|a| exps.iter().map(move |&e| a * zj.powi(e))).collect();
    }
    let (b, cond) = quadratic_inverse(&g, &x)?;
    Ok(KernelValue { b, terms: x.len(), tail: f64::NAN, cond: Some(cond) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuitaReport {
    /// `Π c_j(z_j)²`.
    pub lhs: f64,
    /// `πⁿ B_M(z)`.
    pub rhs: f64,
    pub gap: f64,
}

fn check_point(surfaces: &[ModelSurface], z: &[Complex64]) -> Result<()> {
    if surfaces.is_empty() || surfaces.len() != z.len() {
        return Err(Error::Domain("one coordinate per factor is required".into()));
    }
    Ok(())
}

/// Unweighted comparison of capacities and the product kernel.
pub fn suita_check(surfaces: &[ModelSurface], z: &[Complex64]) -> Result<SuitaReport> {
    check_point(surfaces, z)?;
    let mut lhs = 1.0;
    let mut rhs = 1.0;
    for (s, zj) in surfaces.iter().zip(z) {
        lhs *= s.capacity(*zj)?.powi(2);
        rhs *= PI * bergman_kernel(s, *zj, None)?.b;
    }
    Ok(SuitaReport { lhs, rhs, gap: rhs - lhs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedSuitaReport {
    pub lhs: f64,
    /// `πⁿ ρ(z) B_{M,ρ}(z)`.
    pub rhs: f64,
    pub gap: f64,
    pub relative_gap: f64,
    /// `χ_{z_j} = χ_{-u_j}` on every factor.
    pub predicted_equality: bool,
    pub measured_equality: bool,
}

impl ExtendedSuitaReport {
    pub fn consistent(&self) -> bool {
        self.predicted_equality == self.measured_equality
    }
}

/// Weighted comparison with `ρ = e^{-2Σ u_j}`.
pub fn extended_suita_check(surfaces: &[ModelSurface], z: &[Complex64], u: &[HarmonicWeight]) -> Result<ExtendedSuitaReport> {
    check_point(surfaces, z)?;
    if u.len() != surfaces.len() {
        return Err(Error::Domain("one harmonic weight per factor is required".into()));
    }
    let mut lhs = 1.0;
    let mut rhs = 1.0;
    let mut predicted = true;
    for ((s, zj), uj) in surfaces.iter().zip(z).zip(u) {
        lhs *= s.capacity(*zj)?.powi(2);
        let rho = (-2.0 * uj.eval(*zj)).exp();
        rhs *= PI * rho * bergman_kernel(s, *zj, Some(uj))?.b;
        let ch = s.character_period_point(*zj)?.div(&s.character_period_weight(uj));
        predicted &= ch.is_trivial(CHARACTER_TOL);
    }
    let gap = rhs - lhs;
    let relative_gap = gap / rhs;
    Ok(ExtendedSuitaReport {
        lhs,
        rhs,
        gap,
        relative_gap,
        predicted_equality: predicted,
        measured_equality: relative_gap.abs() <= SUITA_EQUALITY_TOL,
    })
}

/// `dV_M[Ψ]` for `S = Z_1 × … × Z_n` and `Ψ = max_j 2n Σ_k G_j(·, z_{j,k}) + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMeasure {
    /// Points of `S`, row-major over the factor sets.
    pub points: Vec<Vec<Complex64>>,
    /// `lim_t ∫_{-t-1<Ψ<-t} |dw₁∧…∧dw_n|² e^{-Ψ}` at each point.
    pub shell_limits: Vec<f64>,
    /// `2n/σ_{2n-1}` times the shell limit.
    pub masses: Vec<f64>,
}

/// Volume of the unit sphere `S^{2n-1}`.
pub fn sphere_volume(n: usize) -> f64 {
    2.0 * PI.powi(n as i32) / gamma_int(n)
}

fn gamma_int(n: usize) -> f64 {
    (1..n).map(|k| k as f64).product()
}

pub fn point_measure(surfaces: &[ModelSurface], s: &[Vec<Complex64>], shift: f64) -> Result<PointMeasure> {
    let n = surfaces.len();
    if n == 0 || s.len() != n {
        return Err(Error::Domain("one point set per factor is required".into()));
    }
    if s.iter().any(|z| z.is_empty()) {
        return Err(Error::Unsupported("every factor needs at least one point".into()));
    }
    let mass = Mass::from_integer(n as i64);
    let factors: Vec<FactorSpec> =
        surfaces.iter().zip(s).map(|(surf, zs)| FactorSpec::new(*surf, zs.iter().map(|&z| PolePoint { z, p: mass }).collect())).collect();
    let w = WeightSpec::new(factors)?;
    let caps: Vec<Vec<f64>> =
        w.factors().iter().map(|f| (0..f.points.len()).map(|k| f.point_capacity(k)).collect()).collect::<Result<_>>()?;
    let base = (2f64).powi(n as i32) * shell_integral(&vec![0; n], &vec![mass; n], 0.0)?.value * (-shift).exp();
    let mut points = vec![Vec::new()];
    let mut capprod = vec![1.0];
    for (j, zs) in s.iter().enumerate() {
        let mut np = Vec::new();
        let mut nc = Vec::new();
        for (p, c) in points.iter().zip(&capprod) {
            for (k, z) in zs.iter().enumerate() {
                let mut q = p.clone();
                q.push(*z);
                np.push(q);
                nc.push(c * caps[j][k].powi(2));
            }
        }
        points = np;
        capprod = nc;
    }
    let shell_limits: Vec<f64> = capprod.iter().map(|c| base / c).collect();
    let k = 2.0 * n as f64 / sphere_volume(n);
    let masses = shell_limits.iter().map(|v| k * v).collect();
    Ok(PointMeasure { points, shell_limits, masses })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhsawaRow {
    pub point: Vec<Complex64>,
    /// `(πⁿ/n!) κ_M(x)`.
    pub lhs: f64,
    /// `κ_{M/S}(x)`.
    pub rhs: f64,
    /// `(lhs − rhs)/lhs`.
    pub margin: f64,
    pub measured_equality: bool,
    pub predicted_equality: bool,
}

/// Compares the Bergman kernel of `M` with the kernel of `A²(S)` under
/// `dV_M[G(·, S)]`, at every point of `S`.
pub fn ohsawa_check(surfaces: &[ModelSurface], s: &[Vec<Complex64>]) -> Result<Vec<OhsawaRow>> {
    let n = surfaces.len();
    let pm = point_measure(surfaces, s, 0.0)?;
    let single = pm.points.len() == 1;
    let discs = surfaces.iter().all(|x| x.is_disc());
    let nfact = gamma_int(n + 1);
    pm.points
        .iter()
        .zip(&pm.masses)
        .map(|(x, m)| {
            let mut kappa = 1.0;
            for (surf, xj) in surfaces.iter().zip(x) {
                kappa *= bergman_kernel(surf, *xj, None)?.b / 2.0;
            }
            let lhs = PI.powi(n as i32) / nfact * kappa;
            let rhs = 1.0 / m;
            let margin = (lhs - rhs) / lhs;
            Ok(OhsawaRow {
                point: x.clone(),
                lhs,
                rhs,
                margin,
                measured_equality: margin.abs() <= OHSAWA_TOL,
                predicted_equality: single && discs,
            })
        })
        .collect()
}
