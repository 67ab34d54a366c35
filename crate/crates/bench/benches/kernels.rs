use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ris_core::harness::{draw_block, run_block};
use ris_core::phase::{optimize_phases, quadratic_form_terms};
use ris_core::power::{waterfill, DEFAULT_WATERFILL_TOL};
use ris_core::rng::{complex_gaussian, stream_rng, Stream};
use ris_core::schedulers::run_rtv_rand;
use ris_core::{Complex64, OptimizerOptions, PhaseAlphabet, SystemConfig};

fn waterfill_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("waterfill");
    for m in [16usize, 100, 2500] {
        let alphas: Vec<f64> = (0..m).map(|i| 0.01 + (i as f64 * 0.618).fract() * 10.0).collect();
        group.bench_with_input(BenchmarkId::from_parameter(m), &alphas, |b, a| {
            b.iter(|| waterfill(black_box(a), 10.0, DEFAULT_WATERFILL_TOL).unwrap())
        });
    }
    group.finish();
}

fn phase_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_phases");
    let alphabet = PhaseAlphabet::new(2).unwrap();
    for q in [16usize, 100, 400] {
        let mut rng = stream_rng(7, Stream::Users);
        let g: Vec<Complex64> = (0..q).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let f: Vec<Complex64> = (0..q).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let terms = quadratic_form_terms(complex_gaussian(&mut rng, 1.0), &g, &f);
        group.bench_with_input(BenchmarkId::from_parameter(q), &terms, |b, t| {
            b.iter(|| optimize_phases(black_box(t), &alphabet, OptimizerOptions::default()))
        });
    }
    group.finish();
}

fn scheme_bench(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    let ctx = cfg.scheme_context().unwrap();
    let draw = draw_block(&cfg, 0).unwrap();
    c.bench_function("rtv_rand K=16 Q=100 M=100", |b| {
        b.iter(|| run_rtv_rand(black_box(&draw.channel), &draw.schedule, &ctx).unwrap())
    });
    c.bench_function("all schemes, one block", |b| {
        b.iter(|| run_block(black_box(&cfg), 0).unwrap())
    });
}

criterion_group!(benches, waterfill_bench, phase_bench, scheme_bench);
criterion_main!(benches);
