// SPDX-License-Identifier: MIT OR Apache-2.0
//! Model surfaces: the unit disc and the annulus `{r < |z| < 1}`.

use crate::error::{numeric, Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Default number of reflection pairs in the annulus product.
pub const DEFAULT_DEPTH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    Disc,
    Annulus { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSurface {
    kind: SurfaceKind,
    depth: usize,
}

impl ModelSurface {
    pub fn disc() -> Self {
        Self { kind: SurfaceKind::Disc, depth: 0 }
    }

    pub fn annulus(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!("annulus inner radius must lie in (0,1), got {r}")));
        }
        // Enough factors that the dropped terms are below double precision
        // for every interior argument.
        let needed = ((1e-17f64.ln() / r.ln() + 1.0) / 2.0).ceil() as usize;
        Ok(Self { kind: SurfaceKind::Annulus { r }, depth: DEFAULT_DEPTH.max(needed) })
    }

    /// Overrides the truncation depth; the automatic floor still applies.
    pub fn with_depth(mut self, depth: usize) -> Self {
        if let SurfaceKind::Annulus { .. } = self.kind {
            self.depth = self.depth.max(depth);
        }
        self
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_disc(&self) -> bool {
        matches!(self.kind, SurfaceKind::Disc)
    }

    /// Inner radius (0 for the disc).
    pub fn inner_radius(&self) -> f64 {
        match self.kind {
            SurfaceKind::Disc => 0.0,
            SurfaceKind::Annulus { r } => r,
        }
    }

    /// Number of generators of the first homology.
    pub fn genus_rank(&self) -> usize {
        match self.kind {
            SurfaceKind::Disc => 0,
            SurfaceKind::Annulus { .. } => 1,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        match self.kind {
            SurfaceKind::Disc => m < 1.0,
            SurfaceKind::Annulus { r } => m < 1.0 && m > r,
        }
    }

    pub fn check_interior(&self, z: Complex64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{z} is not an interior point of {self}")))
        }
    }

    /// Green function `G(z, w)`; `-∞` when `z = w`.
    pub fn green(&self, z: Complex64, w: Complex64) -> Result<f64> {
        self.check_interior(z)?;
        self.check_interior(w)?;
        Ok(self.green_unchecked(z, w))
    }

    pub(crate) fn green_unchecked(&self, z: Complex64, w: Complex64) -> f64 {
        if z == w {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            SurfaceKind::Disc => ((z - w) / (Complex64::new(1.0, 0.0) - w.conj() * z)).norm().ln(),
            SurfaceKind::Annulus { r } => {
                let lr = r.ln();
                let lw = 0.5 * w.norm_sqr().ln();
                let lz = 0.5 * z.norm_sqr().ln();
                let v = 0.5 * (self.abs2_p(z / w) / self.abs2_p(z * w.conj())).ln() + lw - lz * lw / lr;
                v.min(0.0)
            }
        }
    }

    /// `|P(x)|²` with `P(x) = (1-x) Π_k (1-q^k x)(1-q^k/x)`, `q = r²`.
    fn abs2_p(&self, x: Complex64) -> f64 {
        let q = self.inner_radius().powi(2);
        let one = Complex64::new(1.0, 0.0);
        let xi = x.inv();
        let big2 = x.norm_sqr().max(xi.norm_sqr());
        let mut prod = (one - x).norm_sqr();
        let mut qk = 1.0;
        for _ in 0..self.depth {
            qk *= q;
            if qk * qk * big2 < 1e-36 {
                break;
            }
            prod *= (one - x * qk).norm_sqr() * (one - xi * qk).norm_sqr();
        }
        prod
    }

    /// `P'(x)/P(x)`.
    fn dlog_p(&self, x: Complex64) -> Complex64 {
        let q = self.inner_radius().powi(2);
        let one = Complex64::new(1.0, 0.0);
        let xi = x.inv();
        let mut acc = -(one - x).inv();
        let mut qk = 1.0;
        for _ in 0..self.depth {
            qk *= q;
            acc += -qk / (one - x * qk) + (xi * xi * qk) / (one - xi * qk);
        }
        acc
    }

    /// `2 ∂G(z, w)/∂z`, the holomorphic derivative of the Green function.
    pub fn dgreen(&self, z: Complex64, w: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self.kind {
            SurfaceKind::Disc => (z - w).inv() + w.conj() / (one - w.conj() * z),
            SurfaceKind::Annulus { r } => {
                let k = w.norm().ln() / r.ln();
                self.dlog_p(z / w) / w - self.dlog_p(z * w.conj()) * w.conj() - k / z
            }
        }
    }

    /// Logarithm of the capacity `c(w)` in the coordinate `z - w`.
    pub fn log_capacity(&self, w: Complex64) -> Result<f64> {
        self.check_interior(w)?;
        Ok(match self.kind {
            SurfaceKind::Disc => -(1.0 - w.norm_sqr()).ln(),
            SurfaceKind::Annulus { r } => {
                let q = r * r;
                let mut qk = 1.0;
                let mut s = 0.0;
                for _ in 0..self.depth {
                    qk *= q;
                    s += (1.0 - qk).ln();
                }
                let lw = w.norm().ln();
                2.0 * s - 0.5 * self.abs2_p(Complex64::new(w.norm_sqr(), 0.0)).ln() - lw * lw / r.ln()
            }
        })
    }

    pub fn capacity(&self, w: Complex64) -> Result<f64> {
        self.log_capacity(w).map(f64::exp)
    }

    /// Raw conjugate period of `G(·, w)` around the core circle, computed
    /// as the inward flux through `|z| = sqrt(r|w|)`; not reduced mod 1.
    pub fn point_flux(&self, w: Complex64) -> Result<f64> {
        self.check_interior(w)?;
        let r = match self.kind {
            SurfaceKind::Disc => return Ok(0.0),
            SurfaceKind::Annulus { r } => r,
        };
        let rho = (r * w.norm()).sqrt();
        let flux = |n: usize| {
            let mut acc = crate::numerics::CompensatedSum::new();
            for i in 0..n {
                let z = Complex64::from_polar(rho, 2.0 * PI * (i as f64 + 0.5) / n as f64);
                acc.add((self.dgreen(z, w) * z).re);
            }
            -acc.value() / n as f64
        };
        let mut n = 64;
        let mut prev = flux(n);
        loop {
            n *= 2;
            let cur = flux(n);
            let err = (cur - prev).abs();
            if err <= 1e-12 {
                return Ok(cur);
            }
            if n >= 1 << 16 {
                return Err(numeric("flux quadrature did not settle", err));
            }
            prev = cur;
        }
    }

    /// Character of the multiplicative function attached to `G(·, w)`.
    pub fn character_period_point(&self, w: Complex64) -> Result<CharacterPeriod> {
        if self.is_disc() {
            self.check_interior(w)?;
            return Ok(CharacterPeriod::trivial(0));
        }
        Ok(CharacterPeriod::new(vec![self.point_flux(w)?]))
    }

    /// Character of `e^{-u}` lifted to the universal cover.
    pub fn character_period_weight(&self, u: &HarmonicWeight) -> CharacterPeriod {
        match self.kind {
            SurfaceKind::Disc => CharacterPeriod::trivial(0),
            SurfaceKind::Annulus { .. } => CharacterPeriod::new(vec![u.kappa]),
        }
    }
}

impl std::fmt::Display for ModelSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            SurfaceKind::Disc => write!(f, "disc"),
            SurfaceKind::Annulus { r } => write!(f, "annulus:r={r}"),
        }
    }
}

/// `u(z) = κ log|z| + Re P(z) + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HarmonicWeight {
    pub kappa: f64,
    /// Coefficients of `P`, lowest degree first.
    pub poly: Vec<Complex64>,
    pub constant: f64,
}

impl HarmonicWeight {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Self::default() }
    }

    pub fn log_modulus(kappa: f64) -> Self {
        Self { kappa, ..Self::default() }
    }

    pub fn re_poly(poly: Vec<Complex64>) -> Self {
        Self { poly, ..Self::default() }
    }

    pub fn validate(&self, s: &ModelSurface) -> Result<()> {
        if !self.kappa.is_finite() || !self.constant.is_finite() || self.poly.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("harmonic weight has non-finite coefficients".into()));
        }
        if s.is_disc() && self.kappa != 0.0 {
            return Err(Error::Config("κ·log|z| is not harmonic on the disc".into()));
        }
        Ok(())
    }

    /// Rotation invariant: only the constant term of `P` is present.
    pub fn is_radial(&self) -> bool {
        self.poly.iter().skip(1).all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// The part of `u` that does not depend on `z` when the weight is radial.
    pub fn radial_constant(&self) -> f64 {
        self.constant + self.poly.first().map_or(0.0, |c| c.re)
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let mut p = Complex64::new(0.0, 0.0);
        for c in self.poly.iter().rev() {
            p = p * z + c;
        }
        let lg = if self.kappa != 0.0 { self.kappa * z.norm().ln() } else { 0.0 };
        lg + p.re + self.constant
    }

    /// `2 ∂u/∂z`.
    pub fn dlog(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        for (k, c) in self.poly.iter().enumerate().skip(1) {
            acc += c * k as f64 * zp;
            zp *= z;
        }
        acc + self.kappa / z
    }
}

/// Fractional conjugate periods, one per homology generator, in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterPeriod {
    values: Vec<f64>,
}

/// Tolerance for comparing characters.
pub const CHARACTER_TOL: f64 = 1e-6;

impl CharacterPeriod {
    pub fn new(raw: Vec<f64>) -> Self {
        Self { values: raw.into_iter().map(frac).collect() }
    }

    pub fn trivial(rank: usize) -> Self {
        Self { values: vec![0.0; rank] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v <= tol || v >= 1.0 - tol)
    }

    pub fn pow(&self, k: i64) -> Self {
        Self::new(self.values.iter().map(|v| v * k as f64).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn div(&self, other: &Self) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    /// Distance from the trivial character (max over generators).
    pub fn distance_to_trivial(&self) -> f64 {
        self.values.iter().map(|&v| v.min(1.0 - v)).fold(0.0, f64::max)
    }
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_green_values() {
        let d = ModelSurface::disc();
        assert!((d.green(c(0.5, 0.0), c(0.0, 0.0)).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((d.green(c(0.5, 0.0), c(0.3, 0.0)).unwrap() - (0.2f64 / 0.85).ln()).abs() < 1e-14);
        assert!((d.green(c(0.5, 0.0), c(0.3, 0.0)).unwrap() + 1.446_919_0).abs() < 1e-7);
        assert_eq!(d.green(c(0.2, 0.1), c(0.2, 0.1)).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(d.green(c(1.0, 0.0), c(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn annulus_green_vanishes_at_boundary() {
        let a = ModelSurface::annulus(0.5).unwrap();
        let w = c(0.7, 0.0);
        for k in 0..16 {
            let th = k as f64 * 0.4;
            let v = a.green(Complex64::from_polar(0.999, th), w).unwrap();
            assert!(v < 0.0 && v > -5e-3, "{v}");
            let v = a.green(Complex64::from_polar(0.5 * 1.0005, th), w).unwrap();
            assert!(v < 0.0 && v > -5e-3, "{v}");
        }
        assert!(matches!(a.green(c(0.4, 0.0), w), Err(Error::Domain(_))));
    }

    #[test]
    fn capacities() {
        let d = ModelSurface::disc();
        assert!((d.capacity(c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((d.capacity(c(0.5, 0.0)).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        let a = ModelSurface::annulus(0.5).unwrap();
        assert!((a.log_capacity(c(0.7, 0.0)).unwrap() - 1.175_818_976).abs() < 1e-8);
    }

    #[test]
    fn annulus_capacity_matches_richardson_limit() {
        let a = ModelSurface::annulus(0.5).unwrap();
        let w = c(0.7, 0.1);
        let f = |h: f64| {
            let mut s = 0.0;
            for k in 0..4 {
                let dz = Complex64::from_polar(h, k as f64 * PI / 2.0);
                s += a.green(w + dz, w).unwrap() - h.ln();
            }
            s / 4.0
        };
        let (f3, f4) = (f(1e-3), f(1e-4));
        let lim = f4 + (f4 - f3) / 99.0;
        let lc = a.log_capacity(w).unwrap();
        assert!((lim.exp() - lc.exp()).abs() < 1e-6, "{lim} vs {lc}");
    }

    #[test]
    fn point_periods() {
        let a = ModelSurface::annulus(0.25).unwrap();
        let p = a.character_period_point(c(0.5, 0.0)).unwrap();
        assert!((p.values()[0] - 0.5).abs() < 1e-9);
        let p = a.character_period_point(Complex64::from_polar(0.35, 1.0)).unwrap();
        assert!((p.values()[0] - 0.35f64.ln() / 0.25f64.ln()).abs() < 1e-6);
        assert!((p.values()[0] - 0.7573).abs() < 1e-3);
        for k in 3..=9 {
            let m = 0.1 * k as f64;
            let v = a.point_flux(c(0.0, m)).unwrap();
            assert!((v - m.ln() / 0.25f64.ln()).abs() < 1e-6);
        }
        assert!(ModelSurface::disc().character_period_point(c(0.3, 0.0)).unwrap().values().is_empty());
    }

    #[test]
    fn weight_periods() {
        let a = ModelSurface::annulus(0.3).unwrap();
        assert!(a.character_period_weight(&HarmonicWeight::constant(2.0)).is_trivial(1e-12));
        assert_eq!(a.character_period_weight(&HarmonicWeight::log_modulus(0.5)).values(), &[0.5]);
        let rp = HarmonicWeight::re_poly(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(a.character_period_weight(&rp).is_trivial(1e-12));
        // Conjugate flux of Re(z²) around the core circle vanishes.
        let n = 256;
        let mut flux = 0.0;
        for i in 0..n {
            let z = Complex64::from_polar(0.6, 2.0 * PI * i as f64 / n as f64);
            flux += (rp.dlog(z) * z).re / n as f64;
        }
        assert!(flux.abs() < 1e-12);
        assert!(HarmonicWeight::log_modulus(0.1).validate(&ModelSurface::disc()).is_err());
    }

    #[test]
    fn dgreen_matches_finite_difference() {
        for s in [ModelSurface::disc(), ModelSurface::annulus(0.3).unwrap()] {
            let w = c(0.45, -0.2);
            let z = c(-0.2, 0.6);
            let h = 1e-6;
            let gx = (s.green(z + h, w).unwrap() - s.green(z - h, w).unwrap()) / (2.0 * h);
            let gy = (s.green(z + c(0.0, h), w).unwrap() - s.green(z - c(0.0, h), w).unwrap()) / (2.0 * h);
            let d = s.dgreen(z, w);
            assert!((d - c(gx, -gy)).norm() < 1e-7, "{s}: {d} vs {gx} {gy}");
        }
    }

    #[test]
    fn harmonic_symmetric_and_monotone() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let surfaces = [ModelSurface::disc(), ModelSurface::annulus(0.3).unwrap()];
        let d = ModelSurface::disc();
        for s in &surfaces {
            let lo = s.inner_radius();
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
                let m = lo + (0.98 - lo) * rng.gen::<f64>() + 0.01 * (1.0 - lo);
                Complex64::from_polar(m.min(0.99), rng.gen::<f64>() * 2.0 * PI)
            };
            let mut checked = 0;
            while checked < 100 {
                let z = pick(&mut rng);
                let w = pick(&mut rng);
                if (z - w).norm() < 0.05 {
                    continue;
                }
                checked += 1;
                let g1 = s.green(z, w).unwrap();
                let g2 = s.green(w, z).unwrap();
                assert!(g1 < 0.0);
                assert!((g1 - g2).abs() < 1e-9);
                assert!(d.green(z, w).unwrap() <= g1 + 1e-9);
                let h = 1e-3 * (z.norm() - lo).min(1.0 - z.norm()).min((z - w).norm()).min(1.0);
                if !(s.contains(z + h) && s.contains(z - h) && s.contains(z + c(0.0, h)) && s.contains(z - c(0.0, h))) {
                    continue;
                }
                let lap = s.green(z + h, w).unwrap()
                    + s.green(z - h, w).unwrap()
                    + s.green(z + c(0.0, h), w).unwrap()
                    + s.green(z - c(0.0, h), w).unwrap()
                    - 4.0 * g1;
                assert!(lap.abs() <= 1e-4 * h * h + 1e-13, "lap {lap} h {h}");
            }
        }
    }

    proptest! {
        #[test]
        fn period_is_log_ratio(r in 0.1f64..0.8, t in 0.05f64..0.95, th in 0.0f64..6.0) {
            let a = ModelSurface::annulus(r).unwrap();
            let m = r + (1.0 - r) * t;
            let v = a.point_flux(Complex64::from_polar(m, th)).unwrap();
            prop_assert!((v - m.ln() / r.ln()).abs() < 1e-6);
        }

        #[test]
        fn character_group_law(a in -3.0f64..3.0, b in -3.0f64..3.0, k in -4i64..5) {
            let x = CharacterPeriod::new(vec![a]);
            let y = CharacterPeriod::new(vec![b]);
            let v = x.mul(&y).div(&y).div(&x);
            prop_assert!(v.is_trivial(1e-9));
            let p = x.pow(k).values()[0];
            prop_assert!((p - frac(a * k as f64)).abs() < 1e-9 || (p - frac(a * k as f64)).abs() > 1.0 - 1e-9);
        }
    }
}
