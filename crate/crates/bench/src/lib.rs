//! Fixed problems shared by the benchmarks.

use concave_l2::{BasisSpec, Complex64, FactorSpec, GainFunction, JetGerm, L2Problem, Mass, ModelSurface, WeightSpec};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Disc × disc, poles at the origin with masses (2, 2), constant jet.
pub fn bidisc(n: usize) -> L2Problem {
    let f = FactorSpec::single(ModelSurface::disc(), c(0.0), Mass::from_integer(2));
    let w = WeightSpec::new(vec![f.clone(), f]).expect("valid weights");
    let germ = JetGerm::monomial(vec![0, 0], vec![0, 0], c(1.0));
    L2Problem::new(w, GainFunction::constant(), vec![germ], BasisSpec::uniform(2, n)).expect("valid problem")
}

/// Annulus(0.25) × disc with masses (4, 2) and the germ `w₁`.
pub fn annulus_disc(modulus: f64, n: usize, gain: GainFunction) -> L2Problem {
    let w = WeightSpec::new(vec![
        FactorSpec::single(ModelSurface::annulus(0.25).expect("valid radius"), c(modulus), Mass::from_integer(4)),
        FactorSpec::single(ModelSurface::disc(), c(0.0), Mass::from_integer(2)),
    ])
    .expect("valid weights");
    let germ = JetGerm::monomial(vec![0, 0], vec![1, 0], c(1.0));
    L2Problem::new(w, gain, vec![germ], BasisSpec::uniform(2, n)).expect("valid problem")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(bidisc(4).weights().n(), 2);
        assert!(annulus_disc(0.5, 8, GainFunction::constant()).gain().is_constant());
    }
}
