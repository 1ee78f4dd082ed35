// SPDX-License-Identifier: MIT OR Apache-2.0
//! Quadrature rules, root bracketing and compensated summation.

use crate::error::{numeric, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared, lazily built rule of size `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("rule cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(self.weights.iter()).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        compensated_sum(self.mapped(a, b).map(|(x, w)| w * f(x)))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Kronrod abscissae of the 15-point rule (non-negative half).
pub const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
/// Kronrod weights matching [`GK15_X`].
pub const GK15_W: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Embedded 7-point Gauss weights, for abscissae `GK15_X[1], [3], [5], [7]`.
pub const G7_W: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// The 15 Kronrod nodes on `[a, b]` in increasing order, with Kronrod and
/// Gauss weights (Gauss weight zero on the Kronrod-only nodes).
pub fn gk15_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let gw = if i % 2 == 1 { G7_W[i / 2] } else { 0.0 };
        out[i] = (mid - half * GK15_X[i], half * GK15_W[i], half * gw);
        out[14 - i] = (mid + half * GK15_X[i], half * GK15_W[i], half * gw);
    }
    out[7] = (mid, half * GK15_W[7], half * G7_W[3]);
    out
}

/// One Gauss–Kronrod panel: `(kronrod estimate, |kronrod − gauss|)`.
pub fn gk15<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> (f64, f64) {
    let mut k = CompensatedSum::new();
    let mut g = CompensatedSum::new();
    for (x, wk, wg) in gk15_nodes(a, b) {
        let y = f(x);
        k.add(wk * y);
        if wg != 0.0 {
            g.add(wg * y);
        }
    }
    (k.value(), (k.value() - g.value()).abs())
}

/// Adaptive Gauss–Kronrod integration on a finite interval.
///
/// Panels are split until each panel error is below
/// `max(abs_tol, rel_tol·|I|)·sqrt(width / (b − a))` or `max_depth` is reached.
/// Returns `(value, error estimate)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: usize,
    mut f: F,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (coarse, _) = gk15(a, b, &mut f);
    let scale = coarse.abs();
    let tol = abs_tol.max(rel_tol * scale);
    let width = b - a;
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    let mut stack = vec![(a, b, 0usize)];
    let mut unresolved = 0.0f64;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(lo, hi, &mut f);
        let allowed = tol * ((hi - lo) / width).abs().sqrt();
        if e <= allowed.max(f64::MIN_POSITIVE) || depth >= max_depth {
            if depth >= max_depth && e > allowed {
                unresolved += e;
            }
            total.add(v);
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    if unresolved > 10.0 * tol {
        return Err(numeric("adaptive quadrature did not converge", unresolved));
    }
    Ok((total.value(), err))
}

/// Quadrature rule produced by [`adaptive_gk_rule`].
#[derive(Debug, Clone, Default)]
pub struct GkRule {
    /// Accepted `(node, weight)` pairs in increasing node order.
    pub nodes: Vec<(f64, f64)>,
    pub value: f64,
    pub error: f64,
}

/// Builds an adaptive Gauss–Kronrod rule for a scalar proxy `f` over the
/// panels delimited by `breaks` (sorted).  The rule can then be reused for
/// vector- or matrix-valued integrands whose size is tracked by `f`.
pub fn adaptive_gk_rule<F: FnMut(f64) -> Result<f64>>(breaks: &[f64], rel_tol: f64, max_depth: usize, mut f: F) -> Result<GkRule> {
    struct Panel {
        lo: f64,
        hi: f64,
        k: f64,
        err: f64,
    }
    let mut eval = |lo: f64, hi: f64| -> Result<Panel> {
        let mut k = CompensatedSum::new();
        let mut g = CompensatedSum::new();
        for (x, wk, wg) in gk15_nodes(lo, hi) {
            let y = f(x)?;
            k.add(wk * y);
            if wg != 0.0 {
                g.add(wg * y);
            }
        }
        Ok(Panel { lo, hi, k: k.value(), err: (k.value() - g.value()).abs() })
    };
    let mut initial = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            initial.push(eval(w[0], w[1])?);
        }
    }
    if initial.is_empty() {
        return Ok(GkRule::default());
    }
    let width = breaks[breaks.len() - 1] - breaks[0];
    let scale: f64 = initial.iter().map(|p| p.k.abs()).sum();
    let tol = rel_tol * scale;
    let mut rule = GkRule::default();
    let mut value = CompensatedSum::new();
    let mut unresolved = 0.0;
    for p in initial {
        let mut stack = vec![(p, 0usize)];
        while let Some((p, depth)) = stack.pop() {
            let allowed = tol * ((p.hi - p.lo) / width).sqrt();
            let floor = 4.0 * f64::EPSILON * p.k.abs();
            if p.err <= allowed.max(floor) || depth >= max_depth {
                if p.err > allowed.max(floor) {
                    unresolved += p.err;
                }
                value.add(p.k);
                rule.error += p.err;
                for (x, wk, _) in gk15_nodes(p.lo, p.hi) {
                    rule.nodes.push((x, wk));
                }
            } else {
                let mid = 0.5 * (p.lo + p.hi);
                let left = eval(p.lo, mid)?;
                let right = eval(mid, p.hi)?;
                stack.push((right, depth + 1));
                stack.push((left, depth + 1));
            }
        }
    }
    rule.value = value.value();
    if unresolved > 1e3 * tol.max(f64::MIN_POSITIVE) {
        return Err(numeric("adaptive rule did not resolve the integrand", unresolved));
    }
    Ok(rule)
}

/// Brent's method on a bracket with `f(a)` and `f(b)` of opposite signs.
pub fn brent<F: FnMut(f64) -> f64>(mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64, mut f: F) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() && fa.is_finite() && fc.is_finite() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}

/// Bisection of a monotone predicate: smallest `x` in `[lo, hi]` (to `xtol`)
/// with `pred(x)` true, assuming `pred(hi)` holds.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(mut lo: f64, mut hi: f64, xtol: f64, mut pred: F) -> f64 {
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// [`adaptive_gk_rule`] after mapping each panel through a smoothstep, which
/// flattens square-root and logarithmic behaviour at panel ends.  Returned
/// nodes and weights refer to the original variable.
pub fn adaptive_smooth_rule<F: FnMut(f64) -> Result<f64>>(breaks: &[f64], rel_tol: f64, max_depth: usize, mut f: F) -> Result<GkRule> {
    if breaks.len() < 2 {
        return Ok(GkRule::default());
    }
    let last = breaks.len() - 2;
    let at = |v: f64| {
        let i = (v.floor().max(0.0) as usize).min(last);
        let t = v - i as f64;
        let (a, b) = (breaks[i], breaks[i + 1]);
        (a + (b - a) * t * t * (3.0 - 2.0 * t), (b - a) * 6.0 * t * (1.0 - t))
    };
    let vb: Vec<f64> = (0..breaks.len()).map(|i| i as f64).collect();
    let mut rule = adaptive_gk_rule(&vb, rel_tol, max_depth, |v| {
        let (x, j) = at(v);
        if j == 0.0 {
            return Ok(0.0);
        }
        Ok(f(x)? * j)
    })?;
    rule.nodes = rule
        .nodes
        .into_iter()
        .map(|(v, w)| {
            let (x, j) = at(v);
            (x, w * j)
        })
        .filter(|&(_, w)| w != 0.0)
        .collect();
    Ok(rule)
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut a: f64, mut b: f64, iters: usize, mut f: F) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_rule_handles_sqrt_ends() {
        let r = adaptive_smooth_rule(&[0.0, 1.0], 1e-12, 30, |x| Ok((x * (1.0 - x)).sqrt())).unwrap();
        assert!((r.value - std::f64::consts::PI / 8.0).abs() < 1e-12);
        assert!(r.nodes.len() < 200);
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, v) = golden_max(0.0, 3.0, 60, |x| -(x - 1.234).powi(2) + 2.0);
        assert!((x - 1.234).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 40, 97] {
            let gl = GaussLegendre::new(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let v = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn adaptive_rule_handles_square_root_edges() {
        let f = |x: f64| if x.abs() < 0.3 { (0.09 - x * x).sqrt() } else { 0.0 };
        let rule = adaptive_gk_rule(&[-1.0, 0.0, 1.0], 1e-12, 50, |x| Ok(f(x))).unwrap();
        let exact = std::f64::consts::PI * 0.09 / 2.0;
        assert!((rule.value - exact).abs() < 1e-11);
        let reused: f64 = rule.nodes.iter().map(|&(x, w)| w * f(x)).sum();
        assert!((reused - exact).abs() < 1e-11);
    }

    #[test]
    fn kronrod_panel_is_exact_for_degree_22() {
        let (v, e) = gk15(-1.0, 2.0, |x| x.powi(22));
        let exact = (2f64.powi(23) + 1.0) / 23.0;
        assert!((v - exact).abs() < 1e-9 * exact);
        assert!(e > 0.0);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let (v, _) = integrate_adaptive(0.0, 1.0, 1e-13, 1e-13, 60, |x| x.sqrt()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0;
        let r = brent(0.0, 2.0, f(0.0), f(2.0), 1e-15, f);
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(v, 2.0);
    }
}
