// SPDX-License-Identifier: MIT OR Apache-2.0
//! Per-factor region integrals
//! `A(s)_{ab} = ∫_{S > s} conj(z^{k_a}) z^{k_b} e^{-φ} dλ` with `S = -ψ_j`.

use super::CMat;
use crate::error::{Error, Result};
use crate::numerics::{adaptive_smooth_rule, brent, golden_max, GaussLegendre};
use crate::surfaces::SurfaceKind;
use crate::weights::{mass_to_f64, FactorSpec};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

const ANGULAR_REL_TOL: f64 = 1e-12;
const MAX_DEPTH: usize = 45;
const RAY_SAMPLES: usize = 40;
const GOLDEN_ITERS: usize = 44;
const CHANGE_GRID: usize = 128;
const CRIT_SEEDS_R: usize = 12;
const CRIT_SEEDS_T: usize = 24;

#[derive(Debug, Clone, Copy)]
struct RadialWeight {
    w0: f64,
    kappa: f64,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    /// Disc, single pole at 0, rotation invariant weight: diagonal closed form.
    Origin { p: f64 },
    /// Disc, single pole at `a`: polar quadrature in the Möbius coordinate.
    Mobius { a: Complex64, p: f64 },
    /// Ray-wise root finding around the origin.
    Rays,
}

pub(crate) struct FactorIntegrator {
    spec: FactorSpec,
    exps: Vec<i32>,
    norms: Vec<f64>,
    mode: Mode,
    radial: Option<RadialWeight>,
    inner: f64,
    cache: Mutex<HashMap<u64, Arc<CMat>>>,
    critical: OnceLock<Vec<(Complex64, f64)>>,
}

/// `∫_lo^hi ρ^{e-1} dρ`.
fn pow_int(e: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo == 0.0 {
        return hi.powf(e) / e;
    }
    let l = (hi / lo).ln();
    if (e * l).abs() < 1e-300 || e == 0.0 {
        return l;
    }
    lo.powf(e) * (e * l).exp_m1() / e
}

impl FactorIntegrator {
    pub(crate) fn new(spec: &FactorSpec, exps: Vec<i32>) -> Self {
        let inner = spec.surface.inner_radius();
        let radial = if spec.weight_is_radial() {
            let g0 = spec.g[0].norm();
            Some(RadialWeight { w0: (-2.0 * g0.ln() - 2.0 * spec.u.radial_constant()).exp(), kappa: spec.u.kappa })
        } else {
            None
        };
        let mode = match (spec.surface.kind(), spec.points.as_slice()) {
            (SurfaceKind::Disc, [pt]) if pt.z.norm() == 0.0 && radial.is_some() => Mode::Origin { p: mass_to_f64(&pt.p) },
            (SurfaceKind::Disc, [pt]) => Mode::Mobius { a: pt.z, p: mass_to_f64(&pt.p) },
            _ => Mode::Rays,
        };
        let norms = exps.iter().map(|&k| 2.0 * PI * pow_int(2.0 * k as f64 + 2.0, inner, 1.0)).collect();
        Self { spec: spec.clone(), exps, norms, mode, radial, inner, cache: Mutex::new(HashMap::new()), critical: OnceLock::new() }
    }

    pub(crate) fn dim(&self) -> usize {
        self.exps.len()
    }

    pub(crate) fn exps(&self) -> &[i32] {
        &self.exps
    }

    /// Normalised trace `Σ_a A_aa / ‖z^{k_a}‖²` (unweighted full-surface norms).
    pub(crate) fn proxy(&self, m: &CMat) -> f64 {
        (0..self.dim()).map(|a| m[(a, a)].re / self.norms[a]).sum()
    }

    /// Values of `S` at its critical points, where components of `{S > s}`
    /// merge and `A(s)` is not smooth in `s`.
    pub(crate) fn critical_levels(&self) -> Vec<f64> {
        self.critical_points().iter().map(|c| c.1).collect()
    }

    fn critical_points(&self) -> &[(Complex64, f64)] {
        self.critical.get_or_init(|| {
            let grad = |z: Complex64| -> Complex64 {
                self.spec.points.iter().map(|pt| self.spec.surface.dgreen(z, pt.z) * mass_to_f64(&pt.p)).sum()
            };
            let mut found: Vec<Complex64> = Vec::new();
            let lo = self.inner;
            for ir in 0..CRIT_SEEDS_R {
                let rho = lo + (1.0 - lo) * (ir as f64 + 0.5) / CRIT_SEEDS_R as f64;
                for it in 0..CRIT_SEEDS_T {
                    let mut z = Complex64::from_polar(rho, 2.0 * PI * it as f64 / CRIT_SEEDS_T as f64);
                    for _ in 0..60 {
                        let h = 1e-6 * (1.0 - z.norm()).max(1e-3);
                        let f = grad(z);
                        let df = (grad(z + h) - grad(z - h)) / (2.0 * h);
                        if !f.is_finite() || !df.is_finite() || df.norm() == 0.0 {
                            break;
                        }
                        let step = f / df;
                        z -= step;
                        if !self.spec.surface.contains(z) {
                            break;
                        }
                        if step.norm() < 1e-14 {
                            break;
                        }
                    }
                    if self.spec.surface.contains(z)
                        && grad(z).norm() < 1e-9
                        && self.spec.points.iter().all(|pt| (z - pt.z).norm() > 1e-8)
                        && found.iter().all(|w| (w - z).norm() > 1e-7)
                    {
                        found.push(z);
                    }
                }
            }
            let mut levels: Vec<(Complex64, f64)> = found.iter().map(|&z| (z, self.level(z))).filter(|v| v.1 > 0.0).collect();
            levels.sort_by(|a, b| a.1.total_cmp(&b.1));
            levels
        })
    }

    /// `S = -ψ_j` at `z`; `+∞` at a pole.
    fn level(&self, z: Complex64) -> f64 {
        let v = -self.spec.psi(z);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v.max(0.0)
        }
    }

    /// Region matrix `A(s)`, cached; `s ≤ 0` is the whole surface.
    pub(crate) fn region(&self, s: f64) -> Result<Arc<CMat>> {
        let s = if s <= 0.0 { 0.0 } else { s };
        let key = s.to_bits();
        if let Some(m) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(if s == 0.0 { self.full()? } else { self.compute(s)? });
        self.cache.lock().expect("cache poisoned").insert(key, m.clone());
        Ok(m)
    }

    fn compute(&self, s: f64) -> Result<CMat> {
        match self.mode {
            Mode::Origin { p } => {
                let rw = self.radial.expect("origin mode is radial");
                let r = (-s / (2.0 * p)).exp();
                let n = self.dim();
                let mut m = CMat::zeros(n, n);
                for (i, &k) in self.exps.iter().enumerate() {
                    m[(i, i)] = Complex64::new(rw.w0 * 2.0 * PI * pow_int(2.0 * k as f64 + 2.0, 0.0, r), 0.0);
                }
                Ok(m)
            }
            Mode::Mobius { a, p } => self.mobius(a, (-s / (2.0 * p)).exp()),
            Mode::Rays => self.rays(s),
        }
    }

    fn max_abs_degree(&self) -> usize {
        self.exps.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Whole-surface Gram matrix.
    fn full(&self) -> Result<CMat> {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        if let Some(rw) = self.radial {
            for (i, &k) in self.exps.iter().enumerate() {
                let e = 2.0 * k as f64 + 2.0 - 2.0 * rw.kappa;
                m[(i, i)] = Complex64::new(rw.w0 * 2.0 * PI * pow_int(e, self.inner, 1.0), 0.0);
            }
            return Ok(m);
        }
        let deg = self.max_abs_degree();
        let mut n_r = 2 * deg + 40;
        let mut n_t = 4 * deg + 128;
        let mut prev = self.polar_grid(self.inner, 1.0, n_r, n_t);
        for _ in 0..4 {
            n_r += n_r / 2;
            n_t *= 2;
            let cur = self.polar_grid(self.inner, 1.0, n_r, n_t);
            let (pp, pc) = (self.proxy(&prev), self.proxy(&cur));
            if (pp - pc).abs() <= 1e-12 * pc.abs() {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(crate::error::numeric("whole-surface Gram quadrature did not settle", self.proxy(&prev)))
    }

    fn polar_grid(&self, lo: f64, hi: f64, n_r: usize, n_t: usize) -> CMat {
        let gl = GaussLegendre::cached(n_r);
        let mut acc = CMat::zeros(self.dim(), self.dim());
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        for it in 0..n_t {
            let th = 2.0 * PI * (it as f64 + 0.5) / n_t as f64;
            let u = Complex64::from_polar(1.0, th);
            for (rho, w) in gl.mapped(lo, hi) {
                let z = u * rho;
                let wt = w * rho * (-self.spec.phi(z)).exp() * 2.0 * PI / n_t as f64;
                self.basis_values(z, &mut v);
                rank_one(&mut acc, &v, wt);
            }
        }
        hermitize(&mut acc);
        acc
    }

    fn basis_values(&self, z: Complex64, out: &mut [Complex64]) {
        for (o, &k) in out.iter_mut().zip(&self.exps) {
            *o = z.powi(k);
        }
    }

    fn mobius(&self, a: Complex64, r: f64) -> Result<CMat> {
        let ra = (r * a.norm()).max(1e-300);
        let extra = if a.norm() > 0.0 { (-1.0 / ra.ln()).max(0.0) } else { 0.0 };
        let deg = self.max_abs_degree();
        let mut n_r = deg + 16 + (20.0 * extra).ceil() as usize;
        let mut n_t = (2 * (2 * deg + 2) + 64 + (36.0 * extra).ceil() as usize).min(4096);
        let one = Complex64::new(1.0, 0.0);
        let s2 = 1.0 - a.norm_sqr();
        let grid = |n_r: usize, n_t: usize| {
            let gl = GaussLegendre::cached(n_r);
            let mut acc = CMat::zeros(self.dim(), self.dim());
            let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
            for it in 0..n_t {
                let th = 2.0 * PI * (it as f64 + 0.5) / n_t as f64;
                let u = Complex64::from_polar(1.0, th);
                for (rho, w) in gl.mapped(0.0, r) {
                    let zeta = u * rho;
                    let den = one + a.conj() * zeta;
                    let z = (zeta + a) / den;
                    let jac = s2 * s2 / den.norm_sqr().powi(2);
                    let wt = w * rho * jac * (-self.spec.phi(z)).exp() * 2.0 * PI / n_t as f64;
                    self.basis_values(z, &mut v);
                    rank_one(&mut acc, &v, wt);
                }
            }
            hermitize(&mut acc);
            acc
        };
        let mut prev = grid(n_r, n_t);
        for _ in 0..4 {
            n_r += 8;
            n_t = (n_t * 3 / 2).min(8192);
            let cur = grid(n_r, n_t);
            let (pp, pc) = (self.proxy(&prev), self.proxy(&cur));
            if (pp - pc).abs() <= 1e-12 * pc.abs() {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(crate::error::numeric("Möbius-coordinate quadrature did not settle", self.proxy(&prev)))
    }

    /// `S − s` along the ray at angle `θ`.
    fn ray_fn(&self, u: Complex64, s: f64, rho: f64) -> f64 {
        if rho >= 1.0 || (self.inner > 0.0 && rho <= self.inner) {
            return -s;
        }
        let v = self.level(u * rho);
        (if v.is_finite() { v } else { 1e300 }) - s
    }

    /// Samples of `S − s` along a ray, with interior local maxima refined.
    fn ray_profile(&self, theta: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
        let u = Complex64::from_polar(1.0, theta);
        let lo0 = self.inner;
        let span = 1.0 - lo0;
        let mut pts: Vec<f64> = (0..=RAY_SAMPLES).map(|i| lo0 + span * i as f64 / RAY_SAMPLES as f64).collect();
        for pt in &self.spec.points {
            let w = pt.z * u.conj();
            let proj = w.re;
            let d = w.im.abs();
            let mut push = |x: f64| {
                if x > lo0 && x < 1.0 {
                    pts.push(x);
                }
            };
            push(proj);
            for f in [0.5, 0.1, 0.02] {
                push(proj - f * d);
                push(proj + f * d);
            }
            for f in [0.1, 0.03, 0.01] {
                push(proj - f * span);
                push(proj + f * span);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut vals: Vec<f64> = pts.iter().map(|&x| self.ray_fn(u, s, x)).collect();
        let mut extra = Vec::new();
        for i in 1..pts.len() - 1 {
            if vals[i] <= 0.0 && vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
                let (x, v) = golden_max(pts[i - 1], pts[i + 1], GOLDEN_ITERS, |x| self.ray_fn(u, s, x));
                extra.push((x, v));
            }
            if vals[i] > 0.0 && vals[i] < 1e300 && vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
                let (x, v) = golden_max(pts[i - 1], pts[i + 1], GOLDEN_ITERS, |x| -self.ray_fn(u, s, x));
                extra.push((x, -v));
            }
        }
        if !extra.is_empty() {
            let mut all: Vec<(f64, f64)> = pts.into_iter().zip(vals).chain(extra).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0));
            all.dedup_by(|a, b| a.0 == b.0);
            (pts, vals) = all.into_iter().unzip();
        }
        (pts, vals)
    }

    /// Maximal intervals of `{ρ : S(ρe^{iθ}) > s}`.
    fn ray_intervals(&self, theta: f64, s: f64) -> Vec<(f64, f64)> {
        let u = Complex64::from_polar(1.0, theta);
        let (pts, vals) = self.ray_profile(theta, s);
        let mut out = Vec::new();
        let mut start: Option<f64> = if vals[0] > 0.0 { Some(pts[0]) } else { None };
        for i in 0..pts.len() - 1 {
            let (a, b, fa, fb) = (pts[i], pts[i + 1], vals[i], vals[i + 1]);
            if (fa > 0.0) != (fb > 0.0) {
                let root = brent(a, b, fa, fb, 1e-15, |x| self.ray_fn(u, s, x));
                if fa > 0.0 {
                    out.push((start.take().unwrap_or(a), root));
                } else {
                    start = Some(root);
                }
            }
        }
        if let Some(st) = start {
            out.push((st, pts[pts.len() - 1]));
        }
        out
    }

    /// Number of maximal intervals of `{S > s}` along the ray at `θ`.
    fn interval_count(&self, theta: f64, s: f64) -> usize {
        let (_, vals) = self.ray_profile(theta, s);
        let mut n = 0;
        let mut inside = false;
        for v in vals {
            if v > 0.0 && !inside {
                n += 1;
            }
            inside = v > 0.0;
        }
        n
    }

    /// Angles where the ray topology of `{S > s}` changes (tangencies and
    /// pinches), located by bisection between consecutive angles of `grid`.
    fn change_angles(&self, s: f64, grid: &[f64]) -> Vec<f64> {
        let counts: Vec<usize> = grid.iter().map(|&th| self.interval_count(th, s)).collect();
        let mut out = Vec::new();
        for i in 0..grid.len() - 1 {
            if counts[i] == counts[i + 1] {
                continue;
            }
            let (mut lo, mut hi, clo) = (grid[i], grid[i + 1], counts[i]);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.interval_count(mid, s) == clo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    fn pole_breaks(&self, n0: usize) -> Vec<f64> {
        let mut b: Vec<f64> = (0..=n0).map(|i| 2.0 * PI * i as f64 / n0 as f64).collect();
        for pt in &self.spec.points {
            if pt.z.norm() == 0.0 {
                continue;
            }
            let th = pt.z.arg().rem_euclid(2.0 * PI);
            b.push(th);
            for e in 1..=6 {
                let off = 10f64.powi(-e);
                b.push((th - off).rem_euclid(2.0 * PI));
                b.push((th + off).rem_euclid(2.0 * PI));
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        b
    }

    fn rays(&self, s: f64) -> Result<CMat> {
        let kmin = *self.exps.iter().min().expect("non-empty basis");
        let kmax = *self.exps.iter().max().expect("non-empty basis");
        let dmax = (kmax - kmin) as f64;
        let n0 = dmax.ceil() as usize + 8;
        let mut breaks = self.pole_breaks(n0);
        let mut grid = breaks.clone();
        grid.extend((1..CHANGE_GRID).map(|i| 2.0 * PI * i as f64 / CHANGE_GRID as f64));
        let centres = self.spec.points.iter().map(|p| p.z).chain(self.critical_points().iter().map(|c| c.0));
        for z in centres.filter(|z| z.norm() > 0.0) {
            let th = z.arg();
            grid.push(th.rem_euclid(2.0 * PI));
            for e in 1..=8 {
                for m in [1.0, 2.0, 5.0] {
                    let off = m * 10f64.powi(-e);
                    grid.push((th - off).rem_euclid(2.0 * PI));
                    grid.push((th + off).rem_euclid(2.0 * PI));
                }
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        breaks.extend(self.change_angles(s, &grid));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        let n = self.dim();
        match self.radial {
            Some(rw) => {
                let mmin = 2 * kmin;
                let nm = (2 * (kmax - kmin) + 1) as usize;
                let mut store: HashMap<u64, Vec<f64>> = HashMap::new();
                let q_of = |theta: f64| -> Vec<f64> {
                    let iv = self.ray_intervals(theta, s);
                    (0..nm)
                        .map(|i| {
                            let e = (mmin + i as i32) as f64 + 2.0 - 2.0 * rw.kappa;
                            rw.w0 * iv.iter().map(|&(lo, hi)| pow_int(e, lo, hi)).sum::<f64>()
                        })
                        .collect()
                };
                let rule = adaptive_smooth_rule(&breaks, ANGULAR_REL_TOL, MAX_DEPTH, |theta| {
                    let q = q_of(theta);
                    let p: f64 = self.exps.iter().zip(&self.norms).map(|(&k, nrm)| q[(2 * k - mmin) as usize] / nrm).sum();
                    store.insert(theta.to_bits(), q);
                    Ok(p)
                })?;
                let mut acc = CMat::zeros(n, n);
                let dspan = (kmax - kmin) as usize;
                let mut phase = vec![Complex64::new(0.0, 0.0); 2 * dspan + 1];
                for &(theta, w) in &rule.nodes {
                    let q = store
                        .get(&theta.to_bits())
                        .ok_or_else(|| Error::Numeric { msg: "missing angular node".into(), residual: theta })?;
                    for (i, ph) in phase.iter_mut().enumerate() {
                        *ph = Complex64::from_polar(w, (i as f64 - dspan as f64) * theta);
                    }
                    for a in 0..n {
                        for b in a..n {
                            let ka = self.exps[a];
                            let kb = self.exps[b];
                            let val = q[(ka + kb - mmin) as usize];
                            acc[(a, b)] += phase[(kb - ka + dspan as i32) as usize] * val;
                        }
                    }
                }
                hermitize_upper(&mut acc);
                Ok(acc)
            }
            None => {
                let deg = self.max_abs_degree();
                let gl = GaussLegendre::cached(deg + 20);
                let rule = adaptive_smooth_rule(&breaks, ANGULAR_REL_TOL, MAX_DEPTH, |theta| {
                    let u = Complex64::from_polar(1.0, theta);
                    let mut p = 0.0;
                    for (lo, hi) in self.ray_intervals(theta, s) {
                        for (rho, w) in gl.mapped(lo, hi) {
                            let z = u * rho;
                            let wt = w * rho * (-self.spec.phi(z)).exp();
                            for (&k, nrm) in self.exps.iter().zip(&self.norms) {
                                p += wt * rho.powi(2 * k) / nrm;
                            }
                        }
                    }
                    Ok(p)
                })?;
                let mut acc = CMat::zeros(n, n);
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                for &(theta, wth) in &rule.nodes {
                    let u = Complex64::from_polar(1.0, theta);
                    for (lo, hi) in self.ray_intervals(theta, s) {
                        for (rho, w) in gl.mapped(lo, hi) {
                            let z = u * rho;
                            self.basis_values(z, &mut v);
                            rank_one(&mut acc, &v, wth * w * rho * (-self.spec.phi(z)).exp());
                        }
                    }
                }
                hermitize(&mut acc);
                Ok(acc)
            }
        }
    }

    /// Taylor row: coefficient of `(z − a)^m` in `z^{k}` for every basis exponent.
    pub(crate) fn jet_row(&self, a: Complex64, m: u32) -> Vec<Complex64> {
        self.exps.iter().map(|&k| binom(k, m) * a.powi(k - m as i32)).collect()
    }
}

/// Generalised binomial coefficient `k(k-1)…(k-m+1)/m!`.
pub(crate) fn binom(k: i32, m: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..m {
        v *= (k as f64 - i as f64) / (i as f64 + 1.0);
    }
    v
}

/// `acc += w · conj(v) vᵀ` on the upper triangle.
fn rank_one(acc: &mut CMat, v: &[Complex64], w: f64) {
    let n = v.len();
    for a in 0..n {
        let ca = v[a].conj() * w;
        for b in a..n {
            acc[(a, b)] += ca * v[b];
        }
    }
}

fn hermitize_upper(m: &mut CMat) {
    let n = m.nrows();
    for a in 0..n {
        m[(a, a)].im = 0.0;
        for b in a + 1..n {
            m[(b, a)] = m[(a, b)].conj();
        }
    }
}

fn hermitize(m: &mut CMat) {
    hermitize_upper(m)
}
