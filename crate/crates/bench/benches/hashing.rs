use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nrmips::{IndexConfig, MetaAlgorithm, NormRangeIndex};
use nrmips_bench::fixture;

const ALGORITHMS: [MetaAlgorithm; 4] = [
    MetaAlgorithm::L2Alsh,
    MetaAlgorithm::SignAlsh,
    MetaAlgorithm::SimpleLsh,
    MetaAlgorithm::CrossLsh,
];

fn hash_query(c: &mut Criterion) {
    let (ds, qs) = fixture(2_000, 64, 64);
    let mut group = c.benchmark_group("hash_query");
    for alg in ALGORITHMS {
        let index = NormRangeIndex::build(&ds, IndexConfig::new(alg, 1, 32, 7)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(alg), &index, |b, index| {
            let mut i = 0;
            b.iter(|| {
                i = (i + 1) % qs.len();
                index.hash_query(qs.get(i)).unwrap()
            })
        });
    }
    group.finish();
}

fn build(c: &mut Criterion) {
    let (ds, _) = fixture(10_000, 64, 1);
    let mut group = c.benchmark_group("build");
    group.sample_size(10);
    for alg in ALGORITHMS {
        for w in [1, 64] {
            group.bench_function(BenchmarkId::new(alg.to_string(), w), |b| {
                b.iter(|| NormRangeIndex::build(&ds, IndexConfig::new(alg, w, 32, 7)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, hash_query, build);
criterion_main!(benches);
