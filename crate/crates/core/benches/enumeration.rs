use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quiltfloer::discs::SearchOptions;
use quiltfloer::floer::build_cf;
use quiltfloer::par::Strategy;
use quiltfloer::runner::{self, RunOptions};
use quiltfloer::scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[path = "../tests/support/mod.rs"]
mod support;

fn fixtures(n: usize) -> Vec<support::WigglePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    while out.len() < n {
        if let Some(p) = support::random_wiggled_pair(&mut rng, 12) {
            out.push(p);
        }
    }
    out
}

fn strategies() -> [(&'static str, Strategy); 2] {
    [
        ("sequential", Strategy::Sequential),
        ("parallel", Strategy::Parallel),
    ]
}

fn bigon_enumeration(c: &mut Criterion) {
    let set = fixtures(40);
    let opts = SearchOptions::default();
    let mut g = c.benchmark_group("bigons");
    for (name, strategy) in strategies() {
        g.bench_with_input(BenchmarkId::new(name, set.len()), &set, |b, set| {
            b.iter(|| {
                set.iter()
                    .map(|f| {
                        build_cf(&f.surface, &f.a, &f.b, &opts, strategy)
                            .unwrap()
                            .discs
                            .len()
                    })
                    .sum::<usize>()
            })
        });
    }
    g.finish();
}

fn bundled_scenario(c: &mut Criterion) {
    let text = scenario::bundled("section5").unwrap();
    let mut g = c.benchmark_group("scenario");
    for (name, strategy) in strategies() {
        let opts = RunOptions {
            strategy,
            ..RunOptions::default()
        };
        g.bench_function(name, |b| b.iter(|| runner::run(text, &opts).report.len()));
    }
    g.finish();
}

criterion_group!(benches, bigon_enumeration, bundled_scenario);
criterion_main!(benches);
