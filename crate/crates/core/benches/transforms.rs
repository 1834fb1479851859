//! Data-parallel vs sequential transform routes.
//!
//! The `parallel` feature gates the rayon fast path of `forward`/`inverse`;
//! the `*_seq` routes are always sequential, so the comparison here shows
//! the speedup of the default build directly.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use vilenkin_lab::group::{Radix, RadixSequence};
use vilenkin_lab::transform::{forward, forward_seq, inverse, inverse_seq, CylinderFunction};

fn random_function(radix: &Radix, resolution: usize, seed: u64) -> CylinderFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CylinderFunction::from_fn(Arc::clone(radix), resolution, |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .unwrap()
}

fn bench_transforms(c: &mut Criterion) {
    let cases: Vec<(&str, Radix, usize)> = vec![
        ("walsh-N12", RadixSequence::walsh(12), 12),
        ("m23-N8", RadixSequence::from_pattern(&[2, 3], 8).unwrap().into(), 8),
    ];
    let mut group = c.benchmark_group("forward");
    for (label, radix, n) in &cases {
        let f = random_function(radix, *n, 99);
        group.bench_with_input(BenchmarkId::new("parallel", label), &f, |b, f| {
            b.iter(|| forward(f))
        });
        group.bench_with_input(BenchmarkId::new("sequential", label), &f, |b, f| {
            b.iter(|| forward_seq(f))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("inverse");
    for (label, radix, n) in &cases {
        let spectrum = forward(&random_function(radix, *n, 99));
        group.bench_with_input(BenchmarkId::new("parallel", label), &spectrum, |b, s| {
            b.iter(|| inverse(s))
        });
        group.bench_with_input(BenchmarkId::new("sequential", label), &spectrum, |b, s| {
            b.iter(|| inverse_seq(s))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_transforms);
criterion_main!(benches);
