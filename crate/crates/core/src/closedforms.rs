// SPDX-License-Identifier: MIT OR Apache-2.0
//! Exact evaluations: monomial integrals over shells and sublevel sets of
//! `ψ = max_j 2p_j log|w_j|`, and the linear-case values of `G(t)`.
//!
//! Shell and sublevel integrals are plain Lebesgue integrals.  The `G`
//! formulas use the form norm, which carries a factor `2ⁿ`.

use crate::error::{Error, Result};
use crate::gain::GainFunction;
use crate::l2min::L2Problem;
use crate::numerics::CompensatedSum;
use crate::weights::{degree_bound, enumerate_e, mass_to_f64, q_alpha, JetGerm, Mass, MultiIndex, WeightSpec};
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaTag {
    Shell,
    Sublevel,
    LinearG,
    FiniteG,
    JetRhs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormResult {
    pub value: f64,
    pub formula: FormulaTag,
}

fn check(p: &[Mass], t: f64) -> Result<()> {
    if p.iter().any(|x| !x.is_positive()) {
        return Err(Error::Domain("masses must be positive".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be ≥ 0, got {t}")));
    }
    Ok(())
}

fn alpha_prod(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| a as f64 + 1.0).product()
}

/// `∫_{−t−1<ψ<−t} |w^α|² e^{−ψ} dλ`.
pub fn shell_integral(alpha: &[u32], p: &[Mass], t: f64) -> Result<ClosedFormResult> {
    check(p, t)?;
    if alpha.len() != p.len() {
        return Err(Error::Domain("α and p have different lengths".into()));
    }
    let n = p.len() as i32;
    let q = q_alpha(alpha, p);
    let base = PI.powi(n) / alpha_prod(alpha);
    let value = if q.is_zero() {
        base
    } else {
        let qf = mass_to_f64(&q);
        // (e^{−qt} − e^{−q(t+1)})/q, stable for small q
        base * (qf + 1.0) * (-qf * t).exp() * (-(-qf).exp_m1()) / qf
    };
    Ok(ClosedFormResult { value, formula: FormulaTag::Shell })
}

/// `∫_{ψ<−t} |Σ b_α w^α|² dλ`.
pub fn sublevel_integral(b: &[(MultiIndex, Complex64)], p: &[Mass], t: f64) -> Result<ClosedFormResult> {
    check(p, t)?;
    let n = p.len() as i32;
    let mut acc = CompensatedSum::new();
    for (alpha, c) in b {
        if alpha.len() != p.len() {
            return Err(Error::Domain("α and p have different lengths".into()));
        }
        let decay: f64 = alpha.iter().zip(p).map(|(&a, pj)| (a as f64 + 1.0) / mass_to_f64(pj)).sum();
        acc.add(c.norm_sqr() * PI.powi(n) * (-decay * t).exp() / alpha_prod(alpha));
    }
    Ok(ClosedFormResult { value: acc.value(), formula: FormulaTag::Sublevel })
}

/// `lim_{t→∞} e^t ∫_{ψ<−t} |f|² dλ`; a formula error when a coefficient
/// below the threshold makes the limit infinite.
pub fn sublevel_limit(b: &[(MultiIndex, Complex64)], p: &[Mass]) -> Result<ClosedFormResult> {
    check(p, 0.0)?;
    let n = p.len() as i32;
    let mut acc = CompensatedSum::new();
    for (alpha, c) in b {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let q = q_alpha(alpha, p);
        if q.is_negative() {
            return Err(Error::Formula(format!("coefficient at {alpha:?} makes the limit infinite")));
        }
        if q.is_zero() {
            acc.add(c.norm_sqr() * PI.powi(n) / alpha_prod(alpha));
        }
    }
    Ok(ClosedFormResult { value: acc.value(), formula: FormulaTag::Sublevel })
}

/// `h(t) Σ_{α∈E} |d_α|² (2π)ⁿ e^{−φ(z₀)} / Π_j (α_j+1) c_j(z_j)^{2α_j+2}`.
pub fn linear_g_formula(weights: &WeightSpec, gain: &GainFunction, germ: &JetGerm, t: f64) -> Result<ClosedFormResult> {
    if !weights.single_point() {
        return Err(Error::Formula("the linear formula needs one point per factor".into()));
    }
    let base = vec![0; weights.n()];
    let p = weights.base_masses(&base);
    let (e, _) = enumerate_e(&p, degree_bound(&p));
    if e.is_empty() {
        return Err(Error::Formula("E is empty for these masses".into()));
    }
    for alpha in germ.support() {
        if q_alpha(alpha, &p).is_negative() {
            return Err(Error::Formula(format!("germ index {alpha:?} lies below E; G is not linear")));
        }
    }
    let value = gain.h(t)? * point_sum(weights, &base, germ, 0.0)?;
    Ok(ClosedFormResult { value, formula: FormulaTag::LinearG })
}

/// `Σ_{α∈E_β} |d_α|² (2π)ⁿ e^{−φ(z_β)−Ψ_β} / Π_j (α_j+1) c_{j,β_j}^{2α_j+2}` over
/// the germ's indices with `q_α = 0`.
fn point_sum(weights: &WeightSpec, beta: &[usize], germ: &JetGerm, psi_beta: f64) -> Result<f64> {
    let n = weights.n() as i32;
    let z = weights.base_coords(beta);
    let p = weights.base_masses(beta);
    let caps: Vec<f64> = beta.iter().enumerate().map(|(j, &k)| weights.point_capacity(j, k)).collect::<Result<_>>()?;
    let ephi = (-weights.eval_phi(&z)? - psi_beta).exp();
    let mut acc = CompensatedSum::new();
    for (alpha, d) in germ.terms() {
        if !q_alpha(alpha, &p).is_zero() {
            continue;
        }
        let den: f64 = alpha.iter().zip(&caps).map(|(&a, c)| (a as f64 + 1.0) * c.powi(2 * a as i32 + 2)).product();
        acc.add(d.norm_sqr() * (2.0 * PI).powi(n) * ephi / den);
    }
    Ok(acc.value())
}

/// `h(t) Σ_β |c_β|² (2π)ⁿ e^{−φ(z_β)} / Π_j (γ_{j,β_j}+1) c_{j,β_j}^{2γ_{j,β_j}+2}`.
///
/// `gamma[j][k]` is the exponent at point `k` of factor `j`; `coeffs` lists
/// `(β, c_β)`.
pub fn finite_points_g_formula(
    weights: &WeightSpec,
    gain: &GainFunction,
    gamma: &[Vec<u32>],
    coeffs: &[(Vec<usize>, Complex64)],
    t: f64,
) -> Result<ClosedFormResult> {
    if gamma.len() != weights.n() || gamma.iter().zip(weights.factors()).any(|(g, f)| g.len() != f.points.len()) {
        return Err(Error::Formula("γ must give one exponent per point of every factor".into()));
    }
    for beta in weights.base_points() {
        let s: Mass =
            beta.iter().enumerate().map(|(j, &k)| Mass::from_integer(gamma[j][k] as i64 + 1) / weights.factor(j).points[k].p).sum();
        if s != Mass::one() {
            return Err(Error::Formula(format!("Σ(γ+1)/p = {s} ≠ 1 at β = {beta:?}")));
        }
    }
    let mut acc = CompensatedSum::new();
    for (beta, c) in coeffs {
        if beta.len() != weights.n() || beta.iter().zip(weights.factors()).any(|(&k, f)| k >= f.points.len()) {
            return Err(Error::Formula(format!("unknown base point {beta:?}")));
        }
        let alpha: MultiIndex = beta.iter().enumerate().map(|(j, &k)| gamma[j][k]).collect();
        let germ = JetGerm::monomial(beta.clone(), alpha, *c);
        acc.add(point_sum(weights, beta, &germ, 0.0)?);
    }
    Ok(ClosedFormResult { value: gain.h(t)? * acc.value(), formula: FormulaTag::FiniteG })
}

/// The extension bound `h(0) Σ_β Σ_{α∈E_β} |d_{β,α}|² (2π)ⁿ e^{−(φ+Ψ)(z_β)} /
/// Π_j (α_j+1) c_{j,β_j}^{2α_j+2}`.
pub fn jet_bound_rhs(problem: &L2Problem) -> Result<ClosedFormResult> {
    let w = problem.weights();
    let mut acc = CompensatedSum::new();
    for germ in problem.germs() {
        let p = w.base_masses(&germ.base);
        for alpha in germ.support() {
            if q_alpha(alpha, &p).is_negative() {
                return Err(Error::Config(format!("germ index {alpha:?} at {:?} lies outside E_β", germ.base)));
            }
        }
        let z = w.base_coords(&germ.base);
        acc.add(point_sum(w, &germ.base, germ, w.eval_perturbation(&z))?);
    }
    Ok(ClosedFormResult { value: problem.gain().h(0.0)? * acc.value(), formula: FormulaTag::JetRhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l2min::BasisSpec;
    use crate::oracle::{quad_integral, IntegrandSpec, PolarFactor, Region};
    use crate::surfaces::ModelSurface;
    use crate::weights::{parse_mass, FactorSpec, Perturbation, PolePoint};

    fn m(x: i64) -> Mass {
        Mass::from_integer(x)
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn shell_values() {
        let v = shell_integral(&[0, 0], &[m(2), m(2)], 5.0).unwrap().value;
        assert!((v - PI * PI).abs() < 1e-12);
        let v = shell_integral(&[1], &[m(1)], 0.0).unwrap().value;
        assert!((v - PI * (1.0 - (-1f64).exp())).abs() < 1e-12);
        let v = shell_integral(&[0], &[m(2)], 0.0).unwrap().value;
        assert!((v - PI * (0.5f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sublevel_values() {
        let v = sublevel_integral(&[(vec![0], c(1.0))], &[m(1)], 0.0).unwrap().value;
        assert!((v - PI).abs() < 1e-14);
        let v = sublevel_integral(&[(vec![0, 0], c(1.0))], &[m(2), m(2)], 1.0).unwrap().value;
        assert!((v - PI * PI * (-1f64).exp()).abs() < 1e-12);
        let b = vec![(vec![0, 0], c(1.0)), (vec![1, 0], c(3.0)), (vec![0, 1], c(0.5))];
        let l = sublevel_limit(&b, &[m(2), m(2)]).unwrap().value;
        assert!((l - PI * PI).abs() < 1e-12);
        assert!(sublevel_limit(&[(vec![0], c(1.0))], &[m(2)]).is_err());
    }

    #[test]
    fn closed_forms_match_oracle() {
        for (alpha, p, t) in [(vec![1u32, 0], vec!["0.7", "2"], 1.0), (vec![2], vec!["4"], 0.0), (vec![0, 3, 1], vec!["1", "2", "4"], 1.0)]
        {
            let pm: Vec<Mass> = p.iter().map(|s| parse_mass(s).unwrap()).collect();
            let pf: Vec<f64> = pm.iter().map(mass_to_f64).collect();
            let factors = || pf.iter().map(|&x| PolarFactor::disc().with_log_psi(x)).collect::<Vec<_>>();
            let (a1, p1) = (alpha.clone(), pf.clone());
            let shell = IntegrandSpec::new(factors(), Region::Shell(t), move |z: &[Complex64]| {
                let psi = z.iter().zip(&p1).map(|(w, pj)| 2.0 * pj * w.norm().ln()).fold(f64::NEG_INFINITY, f64::max);
                z.iter().zip(&a1).map(|(w, &a)| w.norm_sqr().powi(a as i32)).product::<f64>() * (-psi).exp()
            })
            .radial();
            let want = shell_integral(&alpha, &pm, t).unwrap().value;
            let got = quad_integral(&shell, 8).unwrap().value;
            assert!((got - want).abs() <= 1e-6 * want, "shell {alpha:?} {p:?}: {got} vs {want}");
            let a2 = alpha.clone();
            let sub = IntegrandSpec::new(factors(), Region::Sublevel(t), move |z: &[Complex64]| {
                z.iter().zip(&a2).map(|(w, &a)| w.norm_sqr().powi(a as i32)).product::<f64>()
            })
            .radial();
            let want = sublevel_integral(&[(alpha.clone(), c(1.0))], &pm, t).unwrap().value;
            let got = quad_integral(&sub, 8).unwrap().value;
            assert!((got - want).abs() <= 1e-6 * want, "sublevel {alpha:?} {p:?}: {got} vs {want}");
        }
    }

    #[test]
    fn shells_telescope() {
        let p = [m(2), parse_mass("0.7").unwrap()];
        let alpha = vec![1, 0];
        let whole = sublevel_integral(&[(alpha.clone(), c(1.0))], &p, 0.0).unwrap().value;
        let rest = sublevel_integral(&[(alpha.clone(), c(1.0))], &p, 6.0).unwrap().value;
        // Without e^{−ψ} a shell is the difference of two sublevel sets.
        let mut sum = 0.0;
        for k in 0..6 {
            let a = sublevel_integral(&[(alpha.clone(), c(1.0))], &p, k as f64).unwrap().value;
            let b = sublevel_integral(&[(alpha.clone(), c(1.0))], &p, k as f64 + 1.0).unwrap().value;
            sum += a - b;
        }
        assert!((sum - (whole - rest)).abs() < 1e-9);
    }

    fn bidisc() -> WeightSpec {
        let f = FactorSpec::single(ModelSurface::disc(), c(0.0), m(2));
        WeightSpec::new(vec![f.clone(), f]).unwrap()
    }

    #[test]
    fn linear_formula_values() {
        let g = JetGerm::monomial(vec![0, 0], vec![0, 0], c(1.0));
        let gain = GainFunction::constant();
        let v0 = linear_g_formula(&bidisc(), &gain, &g, 0.0).unwrap().value;
        assert!((v0 - 4.0 * PI * PI).abs() < 1e-12);
        let v2 = linear_g_formula(&bidisc(), &gain, &g, 2.0).unwrap().value;
        assert!((v2 - 4.0 * PI * PI * (-2f64).exp()).abs() < 1e-12);
        let w = WeightSpec::new(vec![FactorSpec::single(ModelSurface::disc(), c(0.5), m(1))]).unwrap();
        let g1 = JetGerm::monomial(vec![0], vec![0], c(1.0));
        let v = linear_g_formula(&w, &gain, &g1, 1.0).unwrap().value;
        assert!((v - 2.0 * PI / (16.0 / 9.0) * (-1f64).exp()).abs() < 1e-12);
        let w1 = WeightSpec::new(vec![FactorSpec::single(ModelSurface::disc(), c(0.0), parse_mass("1/2").unwrap())]).unwrap();
        assert!(matches!(linear_g_formula(&w1, &gain, &g1, 0.0), Err(Error::Formula(_))));
    }

    #[test]
    fn finite_points_formula() {
        let f = FactorSpec::new(ModelSurface::disc(), vec![PolePoint { z: c(0.0), p: m(1) }, PolePoint { z: c(0.5), p: m(1) }]);
        let w = WeightSpec::new(vec![f]).unwrap();
        let gain = GainFunction::constant();
        let coeffs = vec![(vec![0], c(1.0)), (vec![1], c(1.0))];
        let v = finite_points_g_formula(&w, &gain, &[vec![0, 0]], &coeffs, 0.0).unwrap().value;
        let (c1, c2) = (w.point_capacity(0, 0).unwrap(), w.point_capacity(0, 1).unwrap());
        assert!((v - 2.0 * PI * (1.0 / (c1 * c1) + 1.0 / (c2 * c2))).abs() < 1e-12);
        let v3 = finite_points_g_formula(&w, &gain, &[vec![0, 0]], &coeffs, 3.0).unwrap().value;
        assert!((v3 - (-3f64).exp() * v).abs() < 1e-12 * v);
        assert!(finite_points_g_formula(&w, &gain, &[vec![1, 0]], &coeffs, 0.0).is_err());
        // one point per factor reduces to the linear formula
        let g = JetGerm::monomial(vec![0, 0], vec![0, 0], c(1.0));
        let lin = linear_g_formula(&bidisc(), &gain, &g, 0.5).unwrap().value;
        let fin = finite_points_g_formula(&bidisc(), &gain, &[vec![0], vec![0]], &[(vec![0, 0], c(1.0))], 0.5).unwrap().value;
        assert!((lin - fin).abs() < 1e-12 * lin);
    }

    #[test]
    fn jet_rhs() {
        let g = JetGerm::monomial(vec![0, 0], vec![0, 0], c(1.0));
        let p = L2Problem::new(bidisc(), GainFunction::constant(), vec![g.clone()], BasisSpec::uniform(2, 4)).unwrap();
        let r = jet_bound_rhs(&p).unwrap().value;
        assert!((r - linear_g_formula(&bidisc(), &GainFunction::constant(), &g, 0.0).unwrap().value).abs() < 1e-12);
        let f = FactorSpec::single(ModelSurface::disc(), c(0.0), m(2));
        let wp = WeightSpec::with_perturbation(vec![f.clone(), f], Perturbation::Constant(-1.0)).unwrap();
        let pp = L2Problem::new(wp, GainFunction::constant(), vec![g], BasisSpec::uniform(2, 4)).unwrap();
        assert!((jet_bound_rhs(&pp).unwrap().value - r * 1f64.exp()).abs() < 1e-10);

        let a = ModelSurface::annulus(0.25).unwrap();
        let w = WeightSpec::new(vec![FactorSpec::single(a, c(0.5), m(4)), FactorSpec::single(ModelSurface::disc(), c(0.0), m(2))]).unwrap();
        let g = JetGerm::monomial(vec![0, 0], vec![1, 0], c(1.0));
        let p = L2Problem::new(w, GainFunction::constant(), vec![g], BasisSpec::uniform(2, 6)).unwrap();
        let ca = a.capacity(c(0.5)).unwrap();
        let want = 4.0 * PI * PI / (2.0 * ca.powi(4));
        assert!((jet_bound_rhs(&p).unwrap().value - want).abs() < 1e-12 * want);
    }
}
