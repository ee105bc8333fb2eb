// Batch workloads through `par::map` against a plain sequential loop.
// Build with `--no-default-features` to see the crate-wide fallback, where
// `par::map` itself is sequential.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdlkit::calculus::{check, CheckOptions, System};
use pdlkit::cutelim::{eliminate, random_cut_derivation, random_formula, GenConfig};
use pdlkit::formula::Sequent;
use pdlkit::par;
use pdlkit::prover::eval_circuit;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sequents(n: usize) -> Vec<Sequent> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    (0..n).map(|_| Sequent((0..4).map(|_| random_formula(&mut rng, 9, false, 64)).collect())).collect()
}

fn prover(c: &mut Criterion) {
    let suite = sequents(400);
    let mut g = c.benchmark_group("prove_batch");
    g.bench_function(BenchmarkId::new("parallel", suite.len()), |b| {
        b.iter(|| par::map(&suite, |s| eval_circuit(s).unwrap()).into_iter().filter(|v| *v).count())
    });
    g.bench_function(BenchmarkId::new("sequential", suite.len()), |b| {
        b.iter(|| suite.iter().map(|s| eval_circuit(s).unwrap()).filter(|v| *v).count())
    });
    g.finish();
}

fn cut_elimination(c: &mut Criterion) {
    let pool: Vec<_> = (0..60).map(|s| random_cut_derivation(s, &GenConfig::default()).unwrap()).collect();
    let opts = CheckOptions::new(System::Seq0);
    let mut g = c.benchmark_group("eliminate_batch");
    g.sample_size(20);
    g.bench_function(BenchmarkId::new("parallel", pool.len()), |b| {
        b.iter(|| par::map(&pool, |d| check(&opts, &eliminate(d).unwrap().derivation).is_valid()))
    });
    g.bench_function(BenchmarkId::new("sequential", pool.len()), |b| {
        b.iter(|| pool.iter().map(|d| check(&opts, &eliminate(d).unwrap().derivation).is_valid()).collect::<Vec<_>>())
    });
    g.finish();
    black_box(pool);
}

criterion_group!(benches, prover, cut_elimination);
criterion_main!(benches);
