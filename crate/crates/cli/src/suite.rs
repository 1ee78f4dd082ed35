//! Seeded random scenarios for the concavity suite.

use crate::config::{parse, Scenario};
use concave_l2::weights::{degree_bound, enumerate_e};
use concave_l2::Mass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;

pub const DEFAULT_COUNT: usize = 10;

const ANNULI: [f64; 3] = [0.1, 0.2, 0.3];
const MASSES_ONE: [i64; 3] = [2, 3, 4];
/// Per-factor masses for products; each pair has a non-empty `E`.
const MASS_PAIRS: [(i64, i64); 5] = [(2, 2), (3, 3), (4, 4), (2, 4), (4, 2)];

/// Scenario text for index `i` of the suite drawn from `seed`.
///
/// Gains alternate between `const` and `exp:0.5`. Products of two annuli
/// only use the constant gain. Each base point prescribes one jet index
/// drawn from `E`, so `G` decays like `c(t)e^{-t}`.
pub fn random_config(seed: u64, i: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ i as u64);
    let n = rng.gen_range(1..=2usize);
    let exp_gain = i % 2 == 1;
    let mut annulus: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    if n == 2 && exp_gain && annulus.iter().all(|&a| a) {
        annulus[1] = false;
    }
    if n == 1 && i % 4 < 2 {
        annulus[0] = true;
    }
    let mut s = String::new();
    let _ = writeln!(s, "id = random-{seed}-{i}");
    let _ = writeln!(s, "gain = {}", if exp_gain { "exp:0.5" } else { "const" });
    let basis = match (n, exp_gain) {
        (1, _) => 32,
        (_, false) => 24,
        _ => 18,
    };
    let _ = writeln!(s, "basis_n = {basis}");
    let pair = MASS_PAIRS[rng.gen_range(0..MASS_PAIRS.len())];
    let mut counts = Vec::new();
    let mut masses: Vec<Vec<i64>> = Vec::new();
    for (j, &ann) in annulus.iter().enumerate() {
        let _ = writeln!(s, "[factor]");
        let (lo, hi) = if ann {
            let r = ANNULI[rng.gen_range(0..ANNULI.len())];
            let _ = writeln!(s, "surface = annulus:{r}");
            (0.45, 0.65)
        } else {
            let _ = writeln!(s, "surface = disc");
            (0.0, 0.5)
        };
        let k = rng.gen_range(1..=2usize);
        counts.push(k);
        masses.push(Vec::new());
        let theta0 = rng.gen_range(0.0..std::f64::consts::TAU);
        for q in 0..k {
            let rad: f64 = rng.gen_range(lo..hi);
            let th = theta0 + std::f64::consts::PI * q as f64;
            let p = match (n, j) {
                (1, _) => MASSES_ONE[rng.gen_range(0..MASSES_ONE.len())],
                (_, 0) => pair.0,
                _ => pair.1,
            };
            masses[j].push(p);
            let _ = writeln!(s, "point = {:.4}{:+.4}i @ {p}", rad * th.cos(), rad * th.sin());
        }
    }
    let bases: usize = counts.iter().product();
    for b in 0..bases {
        let mut idx = Vec::new();
        let mut rest = b;
        for &c in &counts {
            idx.push(rest % c);
            rest /= c;
        }
        let _ = writeln!(s, "[germ]");
        let _ = writeln!(s, "base = {}", join(&idx));
        let p: Vec<Mass> = idx.iter().enumerate().map(|(j, &k)| Mass::from_integer(masses[j][k])).collect();
        let (e, _) = enumerate_e(&p, degree_bound(&p));
        let choices: Vec<&Vec<u32>> = e.indices().collect();
        let alpha: Vec<usize> = choices[rng.gen_range(0..choices.len())].iter().map(|&a| a as usize).collect();
        let _ = writeln!(s, "term = {} : {:.3}{:+.3}i", join(&alpha), rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    }
    s
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

pub fn random_scenarios(seed: u64, count: usize) -> Vec<Scenario> {
    (0..count).map(|i| parse(&random_config(seed, i), None).expect("generated scenarios are valid")).collect()
}

/// One line naming the factors, poles and gain.
pub fn describe(sc: &Scenario) -> String {
    let factors: Vec<String> = sc
        .factors
        .iter()
        .map(|f| {
            let surf = if f.surface.is_disc() { "disc".to_string() } else { format!("annulus({})", f.surface.inner_radius()) };
            let pts: Vec<String> = f.points.iter().map(|p| format!("{:.3}@{}", p.z, p.p)).collect();
            format!("{surf}[{}]", pts.join(", "))
        })
        .collect();
    format!("{}: {} with {:?}", sc.id, factors.join(" x "), sc.gain.kind())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_reproducible_and_mixed() {
        let a = random_scenarios(7, DEFAULT_COUNT);
        let b: Vec<String> = (0..DEFAULT_COUNT).map(|i| random_config(7, i)).collect();
        assert_eq!(b, (0..DEFAULT_COUNT).map(|i| random_config(7, i)).collect::<Vec<_>>());
        assert!(a.iter().any(|s| s.factors.iter().any(|f| f.surface.is_disc())));
        assert!(a.iter().any(|s| s.factors.iter().any(|f| !f.surface.is_disc())));
        assert!(a.iter().any(|s| s.gain.is_constant()) && a.iter().any(|s| !s.gain.is_constant()));
        assert!(a.iter().any(|s| s.factors.iter().any(|f| f.points.len() == 2)));
    }
}
