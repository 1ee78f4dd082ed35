// SPDX-License-Identifier: MIT OR Apache-2.0
//! Brute-force reference integrals on products of discs and annuli.
//!
//! These routines deliberately share nothing with [`crate::closedforms`] or the
//! Gram assembly in [`crate::l2min`]: nested Gauss–Legendre in polar
//! coordinates with explicit breakpoints, stratified Monte Carlo, and
//! Aitken extrapolation of limits.

use crate::error::{numeric, Error, Result};
use crate::numerics::{brent, CompensatedSum, GaussLegendre};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

type Radial = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type Pointwise = Box<dyn Fn(&[Complex64]) -> f64 + Send + Sync>;

/// One factor: the annulus `inner < |z| < outer` (a disc when `inner = 0`),
/// with an optional radial, increasing weight `ψ_j(|z|)`.
pub struct PolarFactor {
    pub inner: f64,
    pub outer: f64,
    pub psi: Option<Radial>,
}

impl PolarFactor {
    pub fn disc() -> Self {
        Self { inner: 0.0, outer: 1.0, psi: None }
    }

    pub fn annulus(r: f64) -> Self {
        Self { inner: r, outer: 1.0, psi: None }
    }

    /// `ψ_j = 2p log|z|`.
    pub fn with_log_psi(mut self, p: f64) -> Self {
        self.psi = Some(Box::new(move |rho: f64| 2.0 * p * rho.ln()));
        self
    }

    pub fn with_psi<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.psi = Some(Box::new(f));
        self
    }

    fn psi_at(&self, rho: f64) -> f64 {
        self.psi.as_ref().map_or(f64::NEG_INFINITY, |f| f(rho))
    }

    /// Radius where `ψ_j = level`, if it lies strictly inside.
    fn radius_at(&self, level: f64) -> Option<f64> {
        let f = self.psi.as_ref()?;
        let lo = self.inner.max(1e-300);
        let (flo, fhi) = (f(lo) - level, f(self.outer) - level);
        if !(flo < 0.0 && fhi > 0.0) {
            return None;
        }
        Some(brent(lo, self.outer, flo, fhi, 1e-16, |x| f(x) - level))
    }
}

/// Region in terms of `ψ = max_j ψ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Whole,
    /// `{ψ < −t}`.
    Sublevel(f64),
    /// `{−t−1 < ψ < −t}`.
    Shell(f64),
}

pub struct IntegrandSpec {
    pub factors: Vec<PolarFactor>,
    pub f: Pointwise,
    /// `f` depends on each `z_j` only through `|z_j|`.
    pub radial: bool,
    pub region: Region,
}

impl IntegrandSpec {
    pub fn new<F: Fn(&[Complex64]) -> f64 + Send + Sync + 'static>(factors: Vec<PolarFactor>, region: Region, f: F) -> Self {
        Self { factors, f: Box::new(f), radial: false, region }
    }

    pub fn radial(mut self) -> Self {
        self.radial = true;
        self
    }

    fn inside(&self, m: f64) -> bool {
        match self.region {
            Region::Whole => true,
            Region::Sublevel(t) => m < -t,
            Region::Shell(t) => m < -t && m > -t - 1.0,
        }
    }

    fn levels(&self) -> Vec<f64> {
        match self.region {
            Region::Whole => vec![],
            Region::Sublevel(t) => vec![-t],
            Region::Shell(t) => vec![-t, -t - 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub error: f64,
}

const QUAD_REL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 6;

/// Nested polar Gauss–Legendre with breakpoints at the region boundary and
/// at the kinks of `max_j ψ_j`; doubled until two resolutions agree.
pub fn quad_integral(spec: &IntegrandSpec, resolution: usize) -> Result<OracleValue> {
    if resolution < 8 {
        return Err(Error::Domain(format!("resolution must be at least 8, got {resolution}")));
    }
    if spec.factors.is_empty() || spec.factors.len() > 3 {
        return Err(Error::Unsupported("oracle quadrature supports 1 to 3 factors".into()));
    }
    let mut res = resolution;
    let mut prev = nested(spec, res);
    for _ in 0..MAX_DOUBLINGS {
        res *= 2;
        let cur = nested(spec, res);
        let err = (cur - prev).abs();
        if err <= QUAD_REL_TOL * cur.abs() || (cur == 0.0 && prev == 0.0) {
            return Ok(OracleValue { value: cur, error: err });
        }
        prev = cur;
    }
    Err(numeric("oracle quadrature did not converge", prev))
}

fn nested(spec: &IntegrandSpec, res: usize) -> f64 {
    let gl = GaussLegendre::new(res);
    let n_theta = if spec.radial { 1 } else { 2 * res };
    let mut z = vec![Complex64::new(0.0, 0.0); spec.factors.len()];
    level(spec, &gl, n_theta, 0, f64::NEG_INFINITY, &mut z)
}

fn level(spec: &IntegrandSpec, gl: &GaussLegendre, n_theta: usize, k: usize, run: f64, z: &mut Vec<Complex64>) -> f64 {
    if k == spec.factors.len() {
        return if spec.inside(run) { (spec.f)(z) } else { 0.0 };
    }
    let fac = &spec.factors[k];
    let mut cuts = vec![fac.inner, fac.outer];
    for lv in spec.levels().into_iter().chain(std::iter::once(run)) {
        if lv.is_finite() {
            if let Some(r) = fac.radius_at(lv) {
                cuts.push(r);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut acc = CompensatedSum::new();
    for w in cuts.windows(2) {
        let mid = fac.psi_at(0.5 * (w[0] + w[1])).max(run);
        if matches!(spec.region, Region::Sublevel(t) | Region::Shell(t) if mid >= -t) {
            continue;
        }
        for (rho, wr) in gl.mapped(w[0], w[1]) {
            let m = fac.psi_at(rho).max(run);
            for it in 0..n_theta {
                let th = 2.0 * PI * it as f64 / n_theta as f64;
                z[k] = Complex64::from_polar(rho, th);
                let inner = level(spec, gl, n_theta, k + 1, m, z);
                acc.add(wr * rho * inner * 2.0 * PI / n_theta as f64);
            }
        }
    }
    acc.value()
}

/// Stratified Monte Carlo: the first factor's area coordinate is split into
/// equal strata, every other coordinate is sampled uniformly by area.
pub fn mc_integral(spec: &IntegrandSpec, samples: usize, seed: u64) -> Result<OracleValue> {
    if samples < 10_000 {
        return Err(Error::Domain(format!("at least 10000 samples are required, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strata = 100;
    let per = samples / strata;
    let vol: f64 = spec.factors.iter().map(|f| PI * (f.outer * f.outer - f.inner * f.inner)).product();
    let mut z = vec![Complex64::new(0.0, 0.0); spec.factors.len()];
    let mut total = CompensatedSum::new();
    let mut var = 0.0;
    for s in 0..strata {
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..per {
            let mut m = f64::NEG_INFINITY;
            for (k, fac) in spec.factors.iter().enumerate() {
                let (a2, b2) = (fac.inner * fac.inner, fac.outer * fac.outer);
                let u = if k == 0 { (s as f64 + rng.gen::<f64>()) / strata as f64 } else { rng.gen::<f64>() };
                let rho = (a2 + (b2 - a2) * u).sqrt();
                z[k] = Complex64::from_polar(rho, 2.0 * PI * rng.gen::<f64>());
                m = m.max(fac.psi_at(rho));
            }
            let v = if spec.inside(m) { (spec.f)(&z) } else { 0.0 };
            sum += v;
            sq += v * v;
        }
        let mean = sum / per as f64;
        let sv = (sq / per as f64 - mean * mean).max(0.0) * per as f64 / (per as f64 - 1.0);
        total.add(mean / strata as f64);
        var += sv / per as f64 / (strata * strata) as f64;
    }
    Ok(OracleValue { value: vol * total.value(), error: vol * var.sqrt() })
}

/// `lim_{t→∞} e^t f(t)` by Aitken extrapolation over `t ∈ {4, 6, 8, 10}`.
pub fn limit_extract<F: FnMut(f64) -> Result<f64>>(mut f: F) -> Result<OracleValue> {
    let ts: [f64; 4] = [4.0, 6.0, 8.0, 10.0];
    let mut g = [0.0; 4];
    for (gi, &t) in g.iter_mut().zip(&ts) {
        *gi = t.exp() * f(t)?;
    }
    let aitken = |a: f64, b: f64, c: f64| {
        let den = (c - b) - (b - a);
        if den.abs() <= 1e-15 * (a.abs() + b.abs() + c.abs()) {
            c
        } else {
            c - (c - b) * (c - b) / den
        }
    };
    let e1 = aitken(g[0], g[1], g[2]);
    let e2 = aitken(g[1], g[2], g[3]);
    let spread = (e2 - e1).abs();
    if spread > 1e-4 * e2.abs().max(1e-300) {
        return Err(numeric("limit extrapolation did not settle", spread));
    }
    Ok(OracleValue { value: e2, error: spread })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disc_area() {
        let s = IntegrandSpec::new(vec![PolarFactor::disc()], Region::Whole, |_| 1.0).radial();
        let v = quad_integral(&s, 8).unwrap();
        assert!((v.value - PI).abs() < 1e-10);
        let m = mc_integral(&s, 1_000_000, 7).unwrap();
        assert!((m.value - PI).abs() <= 3.0 * m.error + 1e-12);
    }

    #[test]
    fn annulus_area() {
        let s = IntegrandSpec::new(vec![PolarFactor::annulus(0.5)], Region::Whole, |_| 1.0).radial();
        assert!((quad_integral(&s, 8).unwrap().value - 0.75 * PI).abs() < 1e-10);
    }

    #[test]
    fn bidisc_shell_with_weight() {
        let fs = vec![PolarFactor::disc().with_log_psi(2.0), PolarFactor::disc().with_log_psi(2.0)];
        let s = IntegrandSpec::new(fs, Region::Shell(1.0), |z: &[Complex64]| {
            let psi = z.iter().map(|w| 4.0 * w.norm().ln()).fold(f64::NEG_INFINITY, f64::max);
            (-psi).exp()
        })
        .radial();
        let v = quad_integral(&s, 8).unwrap();
        assert!((v.value - PI * PI).abs() < 1e-6 * PI * PI, "{}", v.value);
    }

    #[test]
    fn non_radial_integrand() {
        // ∫_Δ |1 + z|² = π + π/2
        let s = IntegrandSpec::new(vec![PolarFactor::disc()], Region::Whole, |z: &[Complex64]| (1.0 + z[0]).norm_sqr());
        assert!((quad_integral(&s, 8).unwrap().value - 1.5 * PI).abs() < 1e-10);
    }

    #[test]
    fn mc_is_reproducible_and_zero_safe() {
        let s = IntegrandSpec::new(vec![PolarFactor::disc(), PolarFactor::annulus(0.3)], Region::Whole, |z: &[Complex64]| {
            z[0].norm_sqr() + z[1].re
        });
        let a = mc_integral(&s, 20_000, 3).unwrap();
        let b = mc_integral(&s, 20_000, 3).unwrap();
        assert_eq!(a, b);
        let zero = IntegrandSpec::new(vec![PolarFactor::disc()], Region::Whole, |_| 0.0);
        assert_eq!(mc_integral(&zero, 10_000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn limits() {
        let v = limit_extract(|t| Ok(PI * (-t).exp())).unwrap();
        assert!((v.value - PI).abs() < 1e-12);
        let v = limit_extract(|t| Ok(PI * PI * (-t).exp() * (1.0 + (-t).exp()))).unwrap();
        assert!((v.value - PI * PI).abs() < 1e-9);
        assert!(limit_extract(Ok).is_err());
    }
}
