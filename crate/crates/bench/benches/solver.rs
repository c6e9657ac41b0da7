use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fracstep_bench::{diffusion_system, history_fixture};
use fracstep_core::caputo::{compute_weights, memory_operator};
use fracstep_core::harness::{default_adaptive_policy, point_source_setup};
use fracstep_core::linalg::thomas_solve;
use fracstep_core::{run, RunOptions, TimestepPolicy};

fn memory(c: &mut Criterion) {
    let mut group = c.benchmark_group("memory_operator");
    for n in [250usize, 1000, 4000] {
        let (mesh, history) = history_fixture(n, 101);
        let step = n - 1;
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let w = compute_weights(&mesh, step, 0.5).unwrap();
                black_box(memory_operator(&history, &w, step).unwrap())
            })
        });
    }
    group.finish();
}

fn thomas(c: &mut Criterion) {
    let mut group = c.benchmark_group("thomas_solve");
    for size in [99usize, 999, 9999] {
        let sys = diffusion_system(size, 3.13);
        group.bench_with_input(BenchmarkId::from_parameter(size), &sys, |b, sys| {
            b.iter(|| black_box(thomas_solve(sys).unwrap()))
        });
    }
    group.finish();
}

fn point_source(c: &mut Criterion) {
    let (problem, grid) = point_source_setup(1.0).unwrap();
    let mut group = c.benchmark_group("point_source_to_1");
    group.sample_size(10);
    group.bench_function("adaptive", |b| {
        b.iter(|| {
            let mut pol = default_adaptive_policy();
            black_box(run(&problem, &grid, &mut pol, 1.0, RunOptions::default()).unwrap())
        })
    });
    group.bench_function("fixed_1e-3", |b| {
        b.iter(|| {
            let mut pol = TimestepPolicy::fixed(1e-3).unwrap();
            black_box(run(&problem, &grid, &mut pol, 1.0, RunOptions::default()).unwrap())
        })
    });
    group.finish();
}

criterion_group!(benches, memory, thomas, point_source);
criterion_main!(benches);
