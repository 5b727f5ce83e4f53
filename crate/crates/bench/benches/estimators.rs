//! Timings of the estimators on the default simulation design (n = 200, p = 50).

use criterion::{criterion_group, criterion_main, Criterion};
use mixgraph::copulaem::{self, EmSettings};
use mixgraph::copulatau::{self, PairFitSettings, TauMode};
use mixgraph::dataio::{interval_bounds, BoundsMode};
use mixgraph::glasso::{glasso_fit, glasso_path, SolverSettings};
use mixgraph::simulate::{self, SimDesign};
use mixgraph::tmvn::{self, McSettings};
use mixgraph::MixedDataset;
use std::hint::black_box;

fn dataset() -> MixedDataset {
    simulate::replicate(&SimDesign::default(), 0).expect("default design is valid").1
}

fn glasso(c: &mut Criterion) {
    let ds = dataset();
    let (gamma, _) = copulatau::skeptic_correlation(&ds, TauMode::Sample, &PairFitSettings::default()).unwrap();
    let top = gamma.max_abs_off_diagonal();
    let settings = SolverSettings::default();
    c.bench_function("glasso_fit p50", |b| {
        b.iter(|| glasso_fit(black_box(&gamma), 0.3 * top, None, &settings).unwrap())
    });
    let grid = mixgraph::linalg::log_spaced_desc(top, 0.1 * top, 10);
    c.bench_function("glasso_path p50 x10", |b| {
        b.iter(|| glasso_path(black_box(&gamma), &grid, &settings).unwrap())
    });
}

fn tau(c: &mut Criterion) {
    let ds = dataset();
    let pair = PairFitSettings::default();
    c.bench_function("tau_matrix sample", |b| {
        b.iter(|| copulatau::tau_matrix(black_box(&ds), TauMode::Sample, &pair).unwrap())
    });
    c.bench_function("tau_matrix copula", |b| {
        b.iter(|| copulatau::tau_matrix(black_box(&ds), TauMode::Copula, &pair).unwrap())
    });
}

fn e_step(c: &mut Criterion) {
    let ds = dataset();
    let settings = EmSettings::default();
    let theta = copulaem::em_fit(&ds, 0.2, &EmSettings { max_iters: 1, ..settings })
        .unwrap()
        .theta
        .theta;
    let mc = McSettings::default();
    let full = interval_bounds(&ds, BoundsMode::Full);
    let part = interval_bounds(&ds, BoundsMode::Partitioned);
    c.bench_function("e_step full", |b| {
        b.iter(|| tmvn::expected_second_moment_full(black_box(&full), &theta, &mc, 0, None).unwrap())
    });
    c.bench_function("e_step partitioned", |b| {
        b.iter(|| tmvn::expected_second_moment_partitioned(black_box(&part), &theta, &mc, 0, None).unwrap())
    });
}

fn em(c: &mut Criterion) {
    let ds = dataset();
    let settings = EmSettings::default();
    let mut group = c.benchmark_group("em");
    group.sample_size(10);
    group.bench_function("em_fit one lambda", |b| {
        b.iter(|| copulaem::em_fit(black_box(&ds), 0.2, &settings).unwrap())
    });
    group.finish();
}

criterion_group!(benches, glasso, tau, e_step, em);
criterion_main!(benches);
