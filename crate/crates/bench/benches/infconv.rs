use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use taukit_core::infconv::full_span_kernel;
use taukit_core::*;

fn input(n: usize) -> GridFunction {
    let spec = GridSpec::new(-10.0, 10.0, n).unwrap();
    GridFunction::from_fn(spec, |x| (3.0 * x).sin() + 0.1 * x * x).unwrap()
}

fn bench_infconv(c: &mut Criterion) {
    let mut group = c.benchmark_group("infconv");
    for &n in &[64usize, 1024, 8192] {
        let f = input(n);
        for (name, cost) in [("w", cost_w()), ("quadratic", cost_quadratic(0.5).unwrap())] {
            group.bench_with_input(BenchmarkId::new(format!("fast-{name}"), n), &f, |b, f| {
                b.iter(|| infconv_fast_convex(black_box(f), &cost).unwrap())
            });
        }
        if n <= 1024 {
            let kernel = full_span_kernel(f.spec()).unwrap();
            let g = GridFunction::from_fn(kernel, |y| cost_w().eval(y)).unwrap();
            group.bench_with_input(BenchmarkId::new("brute-w", n), &f, |b, f| {
                b.iter(|| infconv_bruteforce(black_box(f), &g).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_infconv);
criterion_main!(benches);
