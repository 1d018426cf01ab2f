//! Parallel against sequential execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prerand_core::distance::{build_graph, pre_distance, Sources, Stencil};
use prerand_core::exec::{set_mode, Mode};
use prerand_core::harris::weight;
use prerand_core::scenario::Resolved;

fn modes() -> [(Mode, &'static str); 2] {
    [(Mode::Parallel, "parallel"), (Mode::Sequential, "sequential")]
}

fn kernels(c: &mut Criterion) {
    let m = Resolved::builtin("randers_torus").unwrap().metric;

    let mut group = c.benchmark_group("build_graph_n64");
    for (mode, label) in modes() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            set_mode(mode);
            b.iter(|| build_graph(black_box(&m), 64, Stencil::S16).unwrap())
        });
    }
    group.finish();

    let g = build_graph(&m, 24, Stencil::S16).unwrap();
    let mut group = c.benchmark_group("all_pairs_n24");
    group.sample_size(10);
    for (mode, label) in modes() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            set_mode(mode);
            b.iter(|| pre_distance(black_box(&g), Sources::All).unwrap())
        });
    }
    group.finish();

    let g = build_graph(&m, 48, Stencil::S16).unwrap();
    let mut group = c.benchmark_group("harris_weight_n48");
    group.sample_size(10);
    for (mode, label) in modes() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            set_mode(mode);
            b.iter(|| weight(black_box(&g)))
        });
    }
    group.finish();
    set_mode(Mode::Parallel);
}

criterion_group!(benches, kernels);
criterion_main!(benches);
