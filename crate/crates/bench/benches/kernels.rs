use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use affmf::cones::{find_invariant_multicone, furstenberg_cover};
use affmf::empirical::{coarse_spectrum, sample_selfaffine_measure};
use affmf::pressure::{pressure_value, DEFAULT_BUDGET};
use affmf::spectrum::{solve_sq, SpectrumContext, DEFAULT_TOL};
use affmf::systems;
use affmf::PotentialSpec;

fn pressure(c: &mut Criterion) {
    let mut group = c.benchmark_group("pressure_value");
    for sys in [systems::d2(), systems::p1()] {
        let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, 0.5, 1.3).unwrap();
        for n in [10, 14] {
            group.bench_with_input(BenchmarkId::new(sys.name, n), &n, |b, &n| {
                b.iter(|| pressure_value(black_box(&spec), n, DEFAULT_BUDGET).unwrap())
            });
        }
    }
    group.finish();
}

fn root_finding(c: &mut Criterion) {
    let sys = systems::p1();
    let ctx = SpectrumContext::new(&sys.ifs, &sys.mu);
    c.bench_function("solve_sq/p1/q=2/n=10", |b| {
        b.iter(|| solve_sq(&ctx, black_box(2.0), 10, DEFAULT_TOL).unwrap())
    });
}

fn cones(c: &mut Criterion) {
    let sys = systems::d2();
    let cone = find_invariant_multicone(&sys.ifs, 8, 64).multicone.unwrap();
    c.bench_function("furstenberg_cover/d2/16", |b| {
        b.iter(|| furstenberg_cover(&sys.ifs, black_box(&cone), 16).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let sys = systems::d2_carpet();
    let mut group = c.benchmark_group("empirical");
    group.sample_size(10);
    group.bench_function("sample/1e5", |b| {
        b.iter(|| sample_selfaffine_measure(&sys.ifs, &sys.mu, 100_000, black_box(7), 40).unwrap())
    });
    let cloud = sample_selfaffine_measure(&sys.ifs, &sys.mu, 100_000, 7, 40).unwrap();
    group.bench_function("coarse_spectrum/1e5", |b| {
        b.iter(|| coarse_spectrum(black_box(&cloud), &[4, 5, 6, 7, 8], 16).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pressure, root_finding, cones, sampling);
criterion_main!(benches);
