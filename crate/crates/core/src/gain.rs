// SPDX-License-Identifier: MIT OR Apache-2.0
//! Gain functions `c` with `c(t)e^{-t}` non-increasing, and the
//! reparametrisation `h(t) = ∫_t^∞ c(s)e^{-s} ds`.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum GainKind {
    /// `c ≡ 1`.
    Constant,
    /// `c(t) = e^{-a t}` with `a ≥ 0`.
    Exponential { a: f64 },
    /// Log-linear interpolation of `(t_i, c_i)`, held constant outside the grid.
    Tabulated { t: Vec<f64>, log_c: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainFunction {
    kind: GainKind,
    /// Left end `T` of the domain; zero for every weight in this crate.
    t_start: f64,
}

impl GainFunction {
    pub fn constant() -> Self {
        Self { kind: GainKind::Constant, t_start: 0.0 }
    }

    pub fn exponential(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Config(format!("exponential gain rate must be finite and ≥ 0, got {a}")));
        }
        Ok(Self { kind: GainKind::Exponential { a }, t_start: 0.0 })
    }

    /// Tabulated gain from strictly increasing nodes `t` and positive values `c`.
    pub fn tabulated(t: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != c.len() {
            return Err(Error::Config("gain table needs matching, non-empty columns".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("gain table nodes must be finite and strictly increasing".into()));
        }
        if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Config("gain table values must be positive (inf c = 0 is rejected)".into()));
        }
        let log_c: Vec<f64> = c.iter().map(|v| v.ln()).collect();
        for i in 1..t.len() {
            if log_c[i] - log_c[i - 1] > (t[i] - t[i - 1]) + 1e-12 {
                return Err(Error::Config(format!("c(t)e^(-t) increases between t = {} and t = {}", t[i - 1], t[i])));
            }
        }
        Ok(Self { kind: GainKind::Tabulated { t, log_c }, t_start: 0.0 })
    }

    /// Reads a two-column whitespace separated table `(t, c(t))`.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read gain table {}: {e}", path.display())))?;
        let mut t = Vec::new();
        let mut c = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!("gain table line {}: expected two columns", ln + 1)));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("gain table line {}: bad number {s:?}", ln + 1)));
            t.push(parse(cols[0])?);
            c.push(parse(cols[1])?);
        }
        Self::tabulated(t, c)
    }

    pub fn kind(&self) -> &GainKind {
        &self.kind
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    /// True when `c` is constant on `(T, ∞)`.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            GainKind::Constant => true,
            GainKind::Exponential { a } => *a == 0.0,
            GainKind::Tabulated { log_c, .. } => log_c.iter().all(|&v| v == log_c[0]),
        }
    }

    /// `c(t)` for `t > T`.
    pub fn eval_c(&self, t: f64) -> Result<f64> {
        if !(t > self.t_start) || t.is_nan() {
            return Err(Error::Domain(format!("gain evaluated at t = {t} ≤ T = {}", self.t_start)));
        }
        Ok(self.c(t))
    }

    /// `c` extended continuously to the closed half line.
    pub fn c(&self, t: f64) -> f64 {
        match &self.kind {
            GainKind::Constant => 1.0,
            GainKind::Exponential { a } => (-a * t).exp(),
            GainKind::Tabulated { t: ts, log_c } => interp(ts, log_c, t).exp(),
        }
    }

    /// Derivative `c'(t)` (right derivative at table nodes).
    pub fn dc(&self, t: f64) -> f64 {
        match &self.kind {
            GainKind::Constant => 0.0,
            GainKind::Exponential { a } => -a * (-a * t).exp(),
            GainKind::Tabulated { t: ts, log_c } => {
                if t < ts[0] || t >= ts[ts.len() - 1] {
                    return 0.0;
                }
                let i = cell(ts, t);
                let slope = (log_c[i + 1] - log_c[i]) / (ts[i + 1] - ts[i]);
                slope * interp(ts, log_c, t).exp()
            }
        }
    }

    /// Points where `c'` may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            GainKind::Tabulated { t, .. } => t.clone(),
            _ => Vec::new(),
        }
    }

    /// `h(t) = ∫_t^∞ c(s)e^{-s} ds` for `t ≥ T`.
    pub fn h(&self, t: f64) -> Result<f64> {
        if !(t >= self.t_start) {
            return Err(Error::Domain(format!("h evaluated at t = {t} < T = {}", self.t_start)));
        }
        Ok(self.h_unchecked(t))
    }

    fn h_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            GainKind::Constant => (-t).exp(),
            GainKind::Exponential { a } => (-(1.0 + a) * t).exp() / (1.0 + a),
            GainKind::Tabulated { t: ts, log_c } => {
                let n = ts.len();
                let mut acc = 0.0;
                let last = ts[n - 1];
                if t >= last {
                    return log_c[n - 1].exp() * (-t).exp();
                }
                acc += log_c[n - 1].exp() * (-last).exp();
                let mut i = n - 1;
                while i > 0 {
                    let (a, b) = (ts[i - 1], ts[i]);
                    if b <= t {
                        break;
                    }
                    let lo = a.max(t);
                    let slope = (log_c[i] - log_c[i - 1]) / (b - a);
                    let start = interp(ts, log_c, lo) - lo;
                    acc += exp_integral(start, slope - 1.0, b - lo);
                    i -= 1;
                }
                if t < ts[0] {
                    acc += log_c[0].exp() * ((-t).exp() - (-ts[0]).exp());
                }
                acc
            }
        }
    }

    /// Inverse of `h`: the `t` with `h(t) = r`, for `0 < r ≤ h(T)`.
    pub fn h_inv(&self, r: f64) -> Result<f64> {
        let h0 = self.h_unchecked(self.t_start);
        if !(r > 0.0) || r > h0 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("h⁻¹ needs 0 < r ≤ h(T) = {h0}, got {r}")));
        }
        if r >= h0 {
            return Ok(self.t_start);
        }
        Ok(match &self.kind {
            GainKind::Constant => -r.ln(),
            GainKind::Exponential { a } => -(r * (1.0 + a)).ln() / (1.0 + a),
            GainKind::Tabulated { .. } => {
                let mut hi = self.t_start + 1.0;
                while self.h_unchecked(hi) > r {
                    hi = self.t_start + 2.0 * (hi - self.t_start);
                }
                let mut lo = self.t_start;
                while hi - lo > 1e-15 * hi.max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if self.h_unchecked(mid) > r {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }
}

/// `∫_0^L exp(start + k x) dx`, stable for small `k`.
fn exp_integral(start: f64, k: f64, len: f64) -> f64 {
    if (k * len).abs() < 1e-8 {
        start.exp() * len * (1.0 + 0.5 * k * len)
    } else {
        start.exp() * (k * len).exp_m1() / k
    }
}

fn cell(ts: &[f64], t: f64) -> usize {
    match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(ts.len() - 2),
        Err(i) => i - 1,
    }
}

fn interp(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t <= ts[0] {
        return ys[0];
    }
    if t >= ts[n - 1] {
        return ys[n - 1];
    }
    let i = cell(ts, t);
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_values() {
        assert_eq!(GainFunction::constant().eval_c(3.0).unwrap(), 1.0);
        let e = GainFunction::exponential(0.5).unwrap();
        assert!((e.eval_c(2.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((e.h(1.0).unwrap() - (2.0 / 3.0) * (-1.5f64).exp()).abs() < 1e-15);
        assert!((e.h(1.0).unwrap() - 0.148_753_4).abs() < 1e-7);
        assert!(e.h_inv(2.0 / 3.0).unwrap().abs() < 1e-12);
        let c = GainFunction::constant();
        assert_eq!(c.h(0.0).unwrap(), 1.0);
        assert!((c.h(2.0).unwrap() - (-2f64).exp()).abs() < 1e-16);
        assert!((c.h_inv((-3f64).exp()).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(c.h_inv(1.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let c = GainFunction::constant();
        assert!(matches!(c.eval_c(0.0), Err(Error::Domain(_))));
        assert!(matches!(c.h_inv(1.5), Err(Error::Domain(_))));
        assert!(matches!(c.h_inv(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn table_of_ones_is_constant() {
        let g = GainFunction::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert!((g.eval_c(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(g.is_constant());
        for t in [0.0, 0.3, 1.7, 5.0] {
            assert!((g.h(t).unwrap() - (-t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn table_matches_exponential_gain() {
        let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let cs: Vec<f64> = ts.iter().map(|t| (-0.5 * t).exp()).collect();
        let g = GainFunction::tabulated(ts, cs).unwrap();
        let e = GainFunction::exponential(0.5).unwrap();
        for t in [0.0, 0.25, 3.3, 12.0] {
            let d = (g.h(t).unwrap() - e.h(t).unwrap()).abs();
            assert!(d < 1e-12, "t={t} d={d}");
        }
        let t = g.h_inv(0.1).unwrap();
        assert!((g.h(t).unwrap() - 0.1).abs() <= 1e-10 * 0.1);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(GainFunction::tabulated(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(GainFunction::tabulated(vec![0.0, 1.0], vec![1.0, 10.0]).is_err());
        assert!(GainFunction::tabulated(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn c_times_exp_is_non_increasing_on_geometric_grid() {
        let gains = [
            GainFunction::constant(),
            GainFunction::exponential(0.5).unwrap(),
            GainFunction::tabulated(vec![0.0, 1.0, 3.0], vec![2.0, 1.5, 1.0]).unwrap(),
        ];
        for g in &gains {
            let mut prev = f64::INFINITY;
            for i in 0..1000 {
                let t = 1e-6 * 1.02f64.powi(i);
                let v = g.c(t) * (-t).exp();
                assert!(v - prev <= 1e-12);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn h_inverse_roundtrip(a in 0.0f64..3.0, t in 0.0f64..20.0) {
            let g = GainFunction::exponential(a).unwrap();
            let r = g.h(t).unwrap();
            prop_assert!((g.h_inv(r).unwrap() - t).abs() < 1e-8);
            let t2 = t + 0.1;
            prop_assert!(g.h(t2).unwrap() < r);
        }

        #[test]
        fn tabulated_inverse_roundtrip(t in 0.0f64..8.0) {
            let g = GainFunction::tabulated(vec![0.0, 1.0, 2.0, 4.0], vec![3.0, 2.0, 1.2, 1.0]).unwrap();
            let r = g.h(t).unwrap();
            prop_assert!((g.h_inv(r).unwrap() - t).abs() < 1e-8);
        }
    }
}
