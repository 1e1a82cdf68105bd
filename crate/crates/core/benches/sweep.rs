use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qlattice::identities::sweep;
use qlattice::par::Exec;

fn sweep_modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep");
    for (name, exec) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        g.bench_with_input(BenchmarkId::new(name, "k<=3,prec=30"), &exec, |b, &exec| {
            b.iter(|| {
                let reports = sweep(3, 30, exec);
                assert!(reports.iter().all(|r| r.equal));
                reports.len()
            })
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = sweep_modes
}
criterion_main!(benches);
