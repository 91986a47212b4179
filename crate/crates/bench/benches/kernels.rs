use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sigeo_core::distance::{fisher_distance, segment_length, DistanceOptions};
use sigeo_core::estimation::{cramer_rao_gap, Estimator, Experiment, PhiMap, Sampling};
use sigeo_core::fisher::fisher_matrix;
use sigeo_core::hausdorff::{covering_number, MetricCloud, Region};
use sigeo_core::markov::{monotonicity_gap, MarkovKernel};
use sigeo_core::models::from_id;

fn fisher(c: &mut Criterion) {
    let mix = from_id("mixture").unwrap();
    let cat = from_id("categorical:8").unwrap();
    let theta8 = vec![0.1; 7];
    c.bench_function("fisher_matrix/mixture", |b| {
        b.iter(|| fisher_matrix(mix.as_ref(), black_box(&[0.4, 1.2])).unwrap())
    });
    c.bench_function("fisher_matrix/categorical8", |b| {
        b.iter(|| fisher_matrix(cat.as_ref(), black_box(&theta8)).unwrap())
    });
}

fn distance(c: &mut Criterion) {
    let cat = from_id("categorical:3").unwrap();
    let mix = from_id("mixture").unwrap();
    let opts = DistanceOptions::default();
    c.bench_function("segment_length/mixture", |b| {
        b.iter(|| {
            segment_length(
                mix.as_ref(),
                black_box(&[0.3, -1.0]),
                black_box(&[0.6, 2.0]),
                8,
            )
            .unwrap()
        })
    });
    c.bench_function("fisher_distance/categorical3", |b| {
        b.iter(|| {
            fisher_distance(
                cat.as_ref(),
                black_box(&[0.2, 0.3]),
                black_box(&[0.6, 0.1]),
                &opts,
            )
            .unwrap()
        })
    });
}

fn markov(c: &mut Criterion) {
    let m = from_id("categorical:4").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = MarkovKernel::random(m.space().clone(), 3, &mut rng).unwrap();
    c.bench_function("monotonicity_gap/categorical4", |b| {
        b.iter(|| {
            monotonicity_gap(
                &t,
                m.as_ref(),
                black_box(&[0.1, 0.2, 0.3]),
                black_box(&[1.0, -0.5, 0.2]),
            )
            .unwrap()
        })
    });
}

fn hausdorff(c: &mut Criterion) {
    let m = from_id("bernoulli").unwrap();
    let cloud = MetricCloud::chain(m.as_ref(), 0.25, 0.75, 2001).unwrap();
    c.bench_function("covering_number/bernoulli_chain_2001", |b| {
        b.iter(|| covering_number(&cloud, black_box(0.01)).unwrap())
    });
    let loc2 = from_id("gauss-loc2").unwrap();
    let region = Region::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let plane = MetricCloud::lattice(loc2.as_ref(), &region, 33).unwrap();
    c.bench_function("covering_number/plane_33x33", |b| {
        b.iter(|| covering_number(&plane, black_box(0.2)).unwrap())
    });
}

fn estimation(c: &mut Criterion) {
    let m = from_id("categorical:3").unwrap();
    let exp = Experiment::new(m, 10, Sampling::Exact).unwrap();
    let est = Estimator::Mean;
    c.bench_function("cramer_rao_gap/categorical3_n10", |b| {
        b.iter(|| cramer_rao_gap(&exp, black_box(&[0.2, 0.5]), &PhiMap::Identity, &est).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = fisher, distance, markov, hausdorff, estimation
}
criterion_main!(benches);
