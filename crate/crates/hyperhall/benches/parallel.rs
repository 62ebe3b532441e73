//! Sequential vs data-parallel kernels. Each case runs once inside a
//! one-thread rayon pool and once on the global pool; building with
//! `--no-default-features` makes both sequential.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperhall::conductance::tr_c;
use hyperhall::hamiltonian::{build_harper, chebyshev_projection, projection_kernel};
use hyperhall::hypgeo::HPoint;
use hyperhall::magnetic::MagneticData;
use hyperhall::operator::TruncatedSpace;
use hyperhall::surface_group::{Ball, Presentation};
use hyperhall::C64;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("seq", one), ("par", all)]
}

fn bench(c: &mut Criterion) {
    let u = HPoint::half_plane(C64::new(0.0, 1.0)).unwrap();
    let p = Presentation::standard(2).unwrap();
    let space = TruncatedSpace::new(Ball::new(&p, 4, &u).unwrap(), 2);
    let m = MagneticData::new(0.125, u);
    let h = build_harper(&space, &m).unwrap();
    let csr = h.as_sparse().unwrap();
    let n = csr.dim();
    let k = 64;
    let x: Vec<C64> = (0..n * k).map(|i| C64::new((i % 17) as f64 - 8.0, (i % 5) as f64)).collect();
    let proj = chebyshev_projection(&h, -3.26, 120).unwrap();
    let (kernel, _, _) = projection_kernel(&proj, &space, &m, 1e-6);
    let kernel = kernel.truncate(space.ball(), 2);
    let cols: Vec<usize> = (0..32).collect();

    let mut g = c.benchmark_group("kernels");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("harper_matmat", name), &(), |b, _| {
            let mut y = vec![C64::new(0.0, 0.0); n * k];
            b.iter(|| pool.install(|| csr.matmat(&x, k, &mut y)))
        });
        g.bench_with_input(BenchmarkId::new("tr_c", name), &(), |b, _| {
            b.iter(|| pool.install(|| tr_c(&kernel, &space, &m).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("chebyshev_columns", name), &(), |b, _| {
            b.iter(|| pool.install(|| proj.projector.columns(&cols)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
