use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ecosim_core::analytics::{components_over_time_with, detect_bypasses_with};
use ecosim_core::attrition::{sweep_with, Law, SweepSpec};
use ecosim_core::ingest::{generate_ecosystem, GeneratorConfig};
use ecosim_core::modsim::{compare_strategies_with, major_platforms, AdaptationRule, ModerationPolicy};
use ecosim_core::{Execution, SECONDS_PER_DAY};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn attrition_sweep(c: &mut Criterion) {
    let ratios: Vec<f64> = (1..=24).map(|i| i as f64).collect();
    let spec = SweepSpec::new(Law::Square, ratios, vec![1.5, 2.5, 3.5, 4.5]);
    let mut group = c.benchmark_group("attrition_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sweep_with(exec, black_box(&spec)).unwrap())
        });
    }
    group.finish();
}

fn graph_scans(c: &mut Criterion) {
    let mut cfg = GeneratorConfig::ci_scale();
    cfg.rate_core_core *= 20.0;
    let g = generate_ecosystem(&cfg).unwrap().graph;
    let (start, end) = g.time_range();
    let samples: Vec<i64> = (0..64).map(|i| start + (end - start) * i / 63).collect();

    let mut group = c.benchmark_group("bypass_motifs");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| detect_bypasses_with(exec, black_box(&g), 7 * SECONDS_PER_DAY).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("components_over_time");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| components_over_time_with(exec, black_box(&g), &samples))
        });
    }
    group.finish();
}

fn strategy_comparison(c: &mut Criterion) {
    let g = generate_ecosystem(&GeneratorConfig::ci_scale()).unwrap().graph;
    let policies = [ModerationPolicy::majors(major_platforms(&g, 3), 10), ModerationPolicy::adaptive(10)];
    let rule = AdaptationRule {
        bypass_probability: 0.5,
        relink_window_ticks: 5,
    };
    let seeds: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("strategy_comparison");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| compare_strategies_with(exec, black_box(&g), &policies, &rule, 30, &seeds).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, attrition_sweep, graph_scans, strategy_comparison);
criterion_main!(benches);
