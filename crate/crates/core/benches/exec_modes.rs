use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfsub::exponents::{level_exponents, Window};
use mfsub::generators::{weierstrass_with, za_exact_pyramid, za_function, Weierstrass};
use mfsub::grid::build_pyramid_with;
use mfsub::subordination::{decompose_with, DecompositionSchedule};
use mfsub::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn generate(c: &mut Criterion) {
    let mut g = c.benchmark_group("weierstrass_depth16");
    let w = Weierstrass::new(0.5, 2.0);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| weierstrass_with(&w, 2, 16, exec).unwrap()));
    }
    g.finish();
}

fn pyramid(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_pyramid_depth18");
    let f = weierstrass_with(&Weierstrass::new(0.5, 2.0), 2, 18, Exec::default()).unwrap();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| build_pyramid_with(&f, exec)));
    }
    g.finish();
}

fn exponents(c: &mut Criterion) {
    let mut g = c.benchmark_group("level_exponents_za12");
    let p = za_exact_pyramid(2.0 / 3.0, 12).unwrap();
    let w = Window::new(1, 12).unwrap();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| level_exponents(&p, w, exec).unwrap()));
    }
    g.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose_za10");
    let p = za_exact_pyramid(2.0 / 3.0, 10).unwrap();
    let z = za_function(2.0 / 3.0, 10).unwrap();
    let s = DecompositionSchedule::auto_default(10).unwrap();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| decompose_with(&p, &s, Some(&z), exec).unwrap()));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = generate, pyramid, exponents, decomposition
}
criterion_main!(benches);
