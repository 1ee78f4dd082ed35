use concave_l2::analysis::{concavity_check, linearity_check, CurveReport};
use concave_l2::closedforms::{shell_integral, sublevel_integral, sublevel_limit};
use concave_l2::suita::{bergman_kernel, suita_check};
use concave_l2::weights::{enumerate_e, ideal_membership, index_in_ideal, q_alpha};
use concave_l2::{CharacterPeriod, Complex64, Mass, ModelSurface};
use proptest::prelude::*;

fn mass() -> impl Strategy<Value = Mass> {
    (1i64..=48, 1i64..=12).prop_map(|(a, b)| Mass::new(a, b))
}

fn surface() -> impl Strategy<Value = ModelSurface> {
    prop_oneof![Just(ModelSurface::disc()), (0.05f64..0.8).prop_map(|r| ModelSurface::annulus(r).unwrap())]
}

/// A point well inside `s`.
fn point_in(s: ModelSurface, u: f64, th: f64) -> Complex64 {
    let lo = if s.is_disc() { 0.0 } else { s.inner_radius() };
    let rad = lo + (1.0 - lo) * (0.05 + 0.9 * u);
    Complex64::from_polar(rad, th)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e_and_sub_ideal_match_brute_force(p in prop::collection::vec(mass(), 1..=3)) {
        let (e, sub) = enumerate_e(&p, 64);
        let one = Mass::from_integer(1);
        let mut want_e = Vec::new();
        let mut want_sub = Vec::new();
        let bounds: Vec<u32> = p.iter().map(|x| x.floor().to_integer() as u32).collect();
        let mut alpha = vec![0u32; p.len()];
        loop {
            let s: Mass = alpha.iter().zip(&p).map(|(&a, pj)| Mass::from_integer(a as i64 + 1) / pj).sum();
            if s == one { want_e.push(alpha.clone()); }
            if s <= one { want_sub.push(alpha.clone()); }
            prop_assert_eq!(index_in_ideal(&alpha, &p), s > one);
            let mut k = 0;
            loop {
                if k == alpha.len() { break; }
                if alpha[k] < bounds[k] { alpha[k] += 1; break; }
                alpha[k] = 0;
                k += 1;
            }
            if k == alpha.len() { break; }
        }
        let mut got_e: Vec<_> = e.indices().cloned().collect();
        let mut got_sub: Vec<_> = sub.indices().cloned().collect();
        got_e.sort();
        got_sub.sort();
        want_e.sort();
        want_sub.sort();
        prop_assert_eq!(got_e, want_e);
        prop_assert_eq!(&got_sub, &want_sub);
        prop_assert_eq!(ideal_membership(got_sub.iter(), &p), got_sub.is_empty());
    }

    #[test]
    fn sublevel_decays_exactly(alpha in prop::collection::vec(0u32..4, 2), p in prop::collection::vec(mass(), 2), t in 0.0f64..4.0, s in 0.0f64..3.0) {
        let b = vec![(alpha.clone(), Complex64::new(1.0, 0.0))];
        let a = sublevel_integral(&b, &p, t).unwrap().value;
        let later = sublevel_integral(&b, &p, t + s).unwrap().value;
        let q = concave_l2::weights::mass_to_f64(&q_alpha(&alpha, &p)) + 1.0;
        prop_assert!((later - a * (-q * s).exp()).abs() <= 1e-12 * a);
    }

    #[test]
    fn shells_are_finite_and_positive(alpha in prop::collection::vec(0u32..4, 1..=3), seed in prop::collection::vec(mass(), 3), t in 0.0f64..6.0) {
        let p = &seed[..alpha.len()];
        let v = shell_integral(&alpha, p, t).unwrap().value;
        prop_assert!(v.is_finite() && v > 0.0);
        match sublevel_limit(&[(alpha.clone(), Complex64::new(1.0, 0.0))], p) {
            Ok(l) => prop_assert!(l.value >= 0.0),
            Err(_) => prop_assert!(q_alpha(&alpha, p) < Mass::from_integer(0)),
        }
    }

    #[test]
    fn green_is_symmetric_and_nonpositive(s in surface(), u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let z = point_in(s, u, a);
        let w = point_in(s, v, b);
        prop_assume!((z - w).norm() > 1e-3);
        let g1 = s.green(z, w).unwrap();
        let g2 = s.green(w, z).unwrap();
        prop_assert!(g1 <= 0.0 && g2 <= 0.0);
        prop_assert!((g1 - g2).abs() <= 1e-10 * g1.abs().max(1.0));
    }

    #[test]
    fn suita_inequality_holds(s1 in surface(), s2 in surface(), u in 0.0f64..1.0, v in 0.0f64..1.0, a in 0.0f64..6.3) {
        let z = [point_in(s1, u, a), point_in(s2, v, -a)];
        let r = suita_check(&[s1, s2], &z).unwrap();
        prop_assert!(r.gap >= -1e-9 * r.rhs, "{:?}", r);
        prop_assert!(bergman_kernel(&s1, z[0], None).unwrap().b > 0.0);
    }

    #[test]
    fn character_arithmetic(x in -5.0f64..5.0, y in -5.0f64..5.0, k in -6i64..6) {
        let a = CharacterPeriod::new(vec![x]);
        let b = CharacterPeriod::new(vec![y]);
        prop_assert!(a.div(&a).is_trivial(1e-12));
        prop_assert!(a.mul(&b).div(&b).div(&a).is_trivial(1e-12));
        let v = a.pow(k).values()[0];
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn concave_curves_pass(a in 0.1f64..5.0, b in 0.0f64..5.0, curv in 0.0f64..3.0) {
        let pts: Vec<(f64, f64, f64)> = (1..=8).map(|i| {
            let r = i as f64 / 8.0;
            (r, -r.ln(), a + curv + b * r - curv * r * r)
        }).collect();
        let cr = CurveReport::from_points(pts).unwrap();
        prop_assert!(concavity_check(&cr, 1e-12).pass);
        if curv > 0.1 {
            prop_assert!(!linearity_check(&cr, 1e-4).pass);
        }
        let line = CurveReport::from_points((1..=8).map(|i| (i as f64, 0.0, a + b * i as f64)).collect()).unwrap();
        prop_assert!(linearity_check(&line, 1e-12).pass);
    }
}

#[test]
fn green_is_strictly_negative_away_from_the_boundary() {
    for s in [
        ModelSurface::disc(),
        ModelSurface::annulus(0.1).unwrap(),
        ModelSurface::annulus(0.25).unwrap(),
        ModelSurface::annulus(0.5).unwrap(),
    ] {
        for i in 0..5 {
            for j in 0..12 {
                let z = point_in(s, 0.1 + 0.2 * i as f64, 0.0);
                let w = point_in(s, 0.5, j as f64 * 0.5 + 0.1);
                let g = s.green(z, w).unwrap();
                assert!(g < 0.0, "{s:?} {z} {w} {g}");
            }
        }
    }
}
