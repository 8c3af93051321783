use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

use cubiclab::evolve::Stepper;
use cubiclab::functionals::quartic_functional;
use cubiclab::{Complex64, NonlinearityPlan, Scheme, SliceSymbol, StrategyKind, TrilinearSymbol};
use cubiclab_bench::{random_field, SEPARABLE};

fn nonlinearity(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinearity");
    for n in [128usize, 512, 2048] {
        let u = random_field(n, (n / 8) as i64);
        let constant = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), *u.grid()).unwrap();
        let separable = NonlinearityPlan::new(TrilinearSymbol::parse(SEPARABLE).unwrap(), *u.grid()).unwrap();
        group.bench_with_input(BenchmarkId::new("constant", n), &u, |b, u| {
            b.iter(|| constant.apply(black_box(u)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("separable", n), &u, |b, u| {
            b.iter(|| separable.apply(black_box(u)).unwrap())
        });
    }
    let u = random_field(64, 8);
    let dense =
        NonlinearityPlan::with_strategy(TrilinearSymbol::parse(SEPARABLE).unwrap(), *u.grid(), StrategyKind::DenseOracle)
            .unwrap();
    group.bench_function("dense-oracle/64", |b| b.iter(|| dense.apply(black_box(&u)).unwrap()));
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    let u = random_field(512, 64);
    let constant = NonlinearityPlan::new(TrilinearSymbol::real_constant(-2.0), *u.grid()).unwrap();
    let separable = NonlinearityPlan::new(TrilinearSymbol::parse(SEPARABLE).unwrap(), *u.grid()).unwrap();
    for (name, plan, scheme) in [
        ("constant-strang", &constant, Scheme::Strang),
        ("constant-ifrk4", &constant, Scheme::IntegratingFactorRk4),
        ("separable-ifrk4", &separable, Scheme::IntegratingFactorRk4),
    ] {
        let mut stepper = Stepper::new(plan, scheme, 1e-3).unwrap();
        group.bench_function(format!("{name}/512"), |b| {
            b.iter_batched(
                || u.spectrum().to_vec(),
                |mut v| stepper.advance(black_box(&mut v)),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn quartic(c: &mut Criterion) {
    let mut group = c.benchmark_group("quartic-functional");
    for kmax in [8i64, 16, 32] {
        let u = random_field(4 * kmax as usize, kmax);
        let s = SliceSymbol::from_fn(u.grid().dk(), kmax, |q| Complex64::new(1.0 / (1.0 + q[0] * q[0] + q[2] * q[2]), 0.0))
            .hermitian_part();
        group.bench_with_input(BenchmarkId::from_parameter(kmax), &u, |b, u| {
            b.iter(|| quartic_functional(black_box(u), &s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, nonlinearity, step, quartic);
criterion_main!(benches);
