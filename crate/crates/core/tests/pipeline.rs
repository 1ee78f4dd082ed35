use concave_l2::analysis::{concavity_check, jet_equality, sample_curve, theorem11_predicate};
use concave_l2::closedforms::linear_g_formula;
use concave_l2::l2min::{minimal_l2, tensor_decomposition_check, L2Solver};
use concave_l2::oracle::{mc_integral, quad_integral, IntegrandSpec, PolarFactor, Region};
use concave_l2::{BasisSpec, Complex64, FactorSpec, GainFunction, JetGerm, L2Problem, Mass, ModelSurface, WeightSpec};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn annulus_disc(modulus: f64, n: usize) -> L2Problem {
    let w = WeightSpec::new(vec![
        FactorSpec::single(ModelSurface::annulus(0.25).unwrap(), c(modulus), Mass::from_integer(4)),
        FactorSpec::single(ModelSurface::disc(), c(0.0), Mass::from_integer(2)),
    ])
    .unwrap();
    let germ = JetGerm::monomial(vec![0, 0], vec![1, 0], c(1.0));
    L2Problem::new(w, GainFunction::constant(), vec![germ], BasisSpec::uniform(2, n)).unwrap()
}

#[test]
fn tensor_decomposition_on_annulus_product() {
    let gap = tensor_decomposition_check(&annulus_disc(0.5, 12), 0.7).unwrap();
    assert!(gap <= 1e-4, "gap {gap}");
}

#[test]
fn radial_disc_factors_match_linear_formula() {
    let w = WeightSpec::new(vec![
        FactorSpec::single(ModelSurface::disc(), c(0.3), Mass::from_integer(3)),
        FactorSpec::single(ModelSurface::disc(), c(0.0), Mass::new(3, 2)),
    ])
    .unwrap();
    let germ = JetGerm::monomial(vec![0, 0], vec![0, 0], c(1.0)).with(vec![1, 0], c(2.0));
    let gain = GainFunction::exponential(0.5).unwrap();
    let p = L2Problem::new(w.clone(), gain.clone(), vec![germ.clone()], BasisSpec::uniform(2, 8)).unwrap();
    let s = L2Solver::new(&p).unwrap();
    for t in [0.0, 0.5, 2.0] {
        let got = s.minimal_l2(t).unwrap().value;
        let want = linear_g_formula(&w, &gain, &germ, t).unwrap().value;
        assert!((got - want).abs() <= 1e-4 * want, "t={t}: {got} vs {want}");
    }
}

#[test]
fn annulus_jet_equality_tracks_the_character() {
    let lin = annulus_disc(0.5, 24);
    assert!(theorem11_predicate(&lin).unwrap().predicted_linear);
    assert!(jet_equality(&lin).unwrap().ratio >= 0.995);
    let off = annulus_disc(0.6, 24);
    assert!(!theorem11_predicate(&off).unwrap().predicted_linear);
    let r = jet_equality(&off).unwrap();
    assert!(r.ratio < 1.0 && r.ratio > 0.0, "{r:?}");
}

#[test]
fn curves_vanish_at_infinity() {
    let p = annulus_disc(0.6, 24);
    let g0 = minimal_l2(&p, 0.0).unwrap().value;
    let g15 = minimal_l2(&p, 15.0).unwrap().value;
    assert!(g15 <= 1e-5 * g0, "{g15} vs {g0}");
    let cr = sample_curve(&p, &[1.0, 0.75, 0.5, 0.25, 0.1]).unwrap();
    assert!(concavity_check(&cr, 1e-6).pass);
}

#[test]
fn quadrature_and_monte_carlo_agree() {
    let spec = || {
        IntegrandSpec::new(
            vec![PolarFactor::annulus(0.3).with_log_psi(1.0), PolarFactor::disc().with_log_psi(2.0)],
            Region::Sublevel(0.5),
            |z: &[Complex64]| (Complex64::new(1.0, 0.0) + z[0] * z[1]).norm_sqr(),
        )
    };
    let q = quad_integral(&spec(), 16).unwrap();
    let m = mc_integral(&spec(), 200_000, 7).unwrap();
    assert!((q.value - m.value).abs() <= 3.0 * (q.error + m.error), "{q:?} vs {m:?}");
    assert_eq!(mc_integral(&spec(), 20_000, 3).unwrap(), mc_integral(&spec(), 20_000, 3).unwrap());
}
