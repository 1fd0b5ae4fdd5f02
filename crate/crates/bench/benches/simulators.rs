use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sparseflow::sim::{simulate_all, simulate_inner, simulate_outer, simulate_rowwise};
use sparseflow::sparse::{random_sparse, Pattern};
use sparseflow::{Layout, SimConfig};

fn dataflows(c: &mut Criterion) {
    let cfg = SimConfig::default();
    let mut group = c.benchmark_group("dataflow");
    for density in [0.01, 0.1] {
        let a = random_sparse(256, 256, density, Pattern::Uniform, 1).unwrap();
        let b = random_sparse(256, 256, density, Pattern::Uniform, 2).unwrap();
        let a_csc = a.to_layout(Layout::Csc);
        let b_csc = b.to_layout(Layout::Csc);
        group.bench_with_input(BenchmarkId::new("inner", density), &density, |bench, _| {
            bench.iter(|| simulate_inner(black_box(&a), black_box(&b_csc), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("outer", density), &density, |bench, _| {
            bench.iter(|| simulate_outer(black_box(&a_csc), black_box(&b), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("rowwise", density), &density, |bench, _| {
            bench.iter(|| simulate_rowwise(black_box(&a), black_box(&b), &cfg).unwrap())
        });
    }
    group.finish();
}

fn all_three_banded(c: &mut Criterion) {
    let cfg = SimConfig {
        mem_block_rows: 8,
        resident_blocks: 2,
        ..SimConfig::default()
    };
    let a = random_sparse(512, 512, 0.02, Pattern::Banded, 3).unwrap();
    c.bench_function("simulate_all banded 512", |bench| {
        bench.iter(|| simulate_all(black_box(&a), black_box(&a), &cfg).unwrap())
    });
}

criterion_group!(benches, dataflows, all_three_banded);
criterion_main!(benches);
