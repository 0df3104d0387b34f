//! Compares the rayon-parallel kernels against the serial fallback, and the
//! linear Taylor kernel against the softmax kernel and the quadratic oracle.
//!
//! Build with `--no-default-features` to bench the sequential build; the
//! `matmul auto` entries then coincide with `matmul serial`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use taylor_attn::attention::{
    mha_forward, random_attention_inputs, softmax_attention, taylor_attention_linear,
    taylor_attention_quadratic, AttentionKernel, ProjectionWeights,
};
use taylor_attn::linalg::{matmul, matmul_serial};

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for size in [64usize, 128, 256] {
        let a = random_attention_inputs(size, size, 1).q;
        let b = random_attention_inputs(size, size, 2).q;
        group.bench_with_input(BenchmarkId::new("serial", size), &size, |bench, _| {
            bench.iter(|| matmul_serial(black_box(&a), black_box(&b)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("auto", size), &size, |bench, _| {
            bench.iter(|| matmul(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn bench_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("attention-kernels");
    let inp = random_attention_inputs(196, 64, 7);
    group.bench_function("taylor-linear-196x64", |b| {
        b.iter(|| taylor_attention_linear(black_box(&inp)).unwrap())
    });
    group.bench_function("taylor-quadratic-196x64", |b| {
        b.iter(|| taylor_attention_quadratic(black_box(&inp)).unwrap())
    });
    group.bench_function("softmax-196x64", |b| {
        b.iter(|| softmax_attention(black_box(&inp)))
    });
    group.finish();
}

fn bench_mha(c: &mut Criterion) {
    let mut group = c.benchmark_group("mha-forward");
    let h = 3;
    let d = 64;
    let x = random_attention_inputs(196, h * d, 11).q;
    let heads: Vec<ProjectionWeights> = (0..h as u64)
        .map(|s| ProjectionWeights {
            w_q: random_attention_inputs(d, d, 4 * s).q,
            w_k: random_attention_inputs(d, d, 4 * s + 1).q,
            w_v: random_attention_inputs(d, d, 4 * s + 2).q,
            w_o: random_attention_inputs(d, d, 4 * s + 3).q,
        })
        .collect();
    group.bench_function("taylor-3x196x64", |b| {
        b.iter(|| mha_forward(black_box(&x), black_box(&heads), AttentionKernel::Taylor).unwrap())
    });
    group.bench_function("softmax-3x196x64", |b| {
        b.iter(|| mha_forward(black_box(&x), black_box(&heads), AttentionKernel::Softmax).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_matmul, bench_kernels, bench_mha);
criterion_main!(benches);
