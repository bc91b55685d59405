use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use foliation_bench::{dense_series, perturbed_field};
use foliation_core::{holonomy_map, reduce_type, GaussianRational, TypeRS, C64};

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("series");
    for cap in [6, 10] {
        let a = dense_series::<C64>(3, cap);
        let b = dense_series::<C64>(3, cap);
        g.bench_with_input(BenchmarkId::new("mul_float", cap), &cap, |bench, _| {
            bench.iter(|| a.try_mul(&b).unwrap())
        });
        let map = [a.clone(), b.clone(), a.clone()];
        g.bench_with_input(BenchmarkId::new("compose_float", cap), &cap, |bench, _| {
            bench.iter(|| a.compose(&map).unwrap())
        });
    }
    let a = dense_series::<GaussianRational>(3, 6);
    g.bench_function("mul_exact/6", |bench| bench.iter(|| a.try_mul(&a).unwrap()));
    g.finish();
}

fn normal_form(c: &mut Criterion) {
    let mut g = c.benchmark_group("reduce_type");
    g.sample_size(10);
    let (x, spec) = perturbed_field::<GaussianRational>(2, 8);
    g.bench_function("exact_cap8_to_4_4", |bench| {
        bench.iter(|| reduce_type(&x, &spec, TypeRS::new(4, 4)).unwrap())
    });
    let (x, spec) = perturbed_field::<C64>(2, 8);
    g.bench_function("float_cap8_to_4_4", |bench| {
        bench.iter(|| reduce_type(&x, &spec, TypeRS::new(4, 4)).unwrap())
    });
    g.finish();
}

fn holonomy(c: &mut Criterion) {
    let mut g = c.benchmark_group("holonomy");
    g.sample_size(10);
    for cap in [4, 8] {
        let (x, _) = perturbed_field::<C64>(3, cap);
        g.bench_with_input(BenchmarkId::new("map", cap), &cap, |bench, _| {
            bench.iter(|| holonomy_map(&x, C64::new(0.5, 0.0)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, series, normal_form, holonomy);
criterion_main!(benches);
