use criterion::{criterion_group, criterion_main, Criterion};
use taukit_core::tau::quantile_grid;
use taukit_core::*;

fn bench_tau(c: &mut Criterion) {
    let phi = TestFunction::piecewise_linear(vec![-2.0, 0.0, 1.5], vec![0.5, -1.0, 2.0]).unwrap();
    let mut group = c.benchmark_group("tau");
    group.sample_size(10);
    for couple in [TauCouple::exponential_w(), TauCouple::laplace_u(), TauCouple::gaussian_quarter()] {
        let mu = match &couple.measure {
            taukit_core::tau::CoupleMeasure::Line(m) => m.clone(),
            _ => unreachable!(),
        };
        let grid = quantile_grid(&mu, 0.01).unwrap();
        group.bench_function(format!("1d-{}", couple.label()), |b| {
            b.iter(|| tau_eval_1d(&couple, &phi, &grid).unwrap())
        });
    }
    let f2 = TestFunction::piecewise_linear(vec![-3.0, 0.0, 2.0], vec![0.0, 2.0, -0.5]).unwrap();
    let sep = TestFunction::separable(vec![phi.clone(), f2]);
    let c2 = TauCouple::laplace_product(2).unwrap();
    group.bench_function("mc-laplace-2d-100k", |b| {
        b.iter(|| tau_eval_nd_mc(&c2, &sep, 100_000, McOptions { seed: 1, ..Default::default() }).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_tau);
criterion_main!(benches);
