use concave_l2::closedforms::{shell_integral, sublevel_integral};
use concave_l2::l2min::{minimal_l2, L2Solver};
use concave_l2::suita::bergman_kernel;
use concave_l2::{Complex64, GainFunction, Mass, ModelSurface};
use concave_l2_bench::{annulus_disc, bidisc};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn green(c: &mut Criterion) {
    let a = ModelSurface::annulus(0.25).unwrap();
    let z = Complex64::new(0.31, 0.42);
    let w = Complex64::new(-0.5, 0.1);
    c.bench_function("annulus green", |b| b.iter(|| a.green(black_box(z), black_box(w)).unwrap()));
    c.bench_function("annulus bergman kernel", |b| b.iter(|| bergman_kernel(&a, black_box(z), None).unwrap()));
}

fn closed_forms(c: &mut Criterion) {
    let p = [Mass::from_integer(2), Mass::new(3, 2), Mass::new(7, 10)];
    c.bench_function("shell integral n=3", |b| b.iter(|| shell_integral(black_box(&[1, 0, 2]), &p, 1.0).unwrap()));
    let terms = [(vec![0, 0, 0], Complex64::new(1.0, 0.0)), (vec![1, 0, 0], Complex64::new(0.5, -1.0))];
    c.bench_function("sublevel integral n=3", |b| b.iter(|| sublevel_integral(black_box(&terms), &p, 1.0).unwrap()));
}

fn minimisation(c: &mut Criterion) {
    let bi = bidisc(8);
    c.bench_function("bidisc minimal_l2 N=8", |b| b.iter(|| minimal_l2(black_box(&bi), 0.5).unwrap()));
    let an = annulus_disc(0.5, 12, GainFunction::constant());
    let solver = L2Solver::new(&an).unwrap();
    c.bench_function("annulus x disc minimal_l2 N=12", |b| b.iter(|| solver.minimal_l2(black_box(0.7)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = green, closed_forms, minimisation
}
criterion_main!(benches);
