use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use doubling_bench::f_space;
use doubling_core::packing::{default_scale_cap, packing_profile, PackingMode, ProfileOptions, RadiiPolicy};

fn dyadic_profile(c: &mut Criterion) {
    let mut group = c.benchmark_group("packing_profile_dyadic");
    for l in [2, 3] {
        let space = f_space(l);
        let options = ProfileOptions {
            policy: RadiiPolicy::Dyadic,
            mode: PackingMode::Exact,
            scale_cap: Some(default_scale_cap(&space)),
            ..ProfileOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(space.len()), &space, |b, s| {
            b.iter(|| packing_profile(s, &options))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = dyadic_profile
}
criterion_main!(benches);
