use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use verislm_core::dataset::{separation_mock_table, synthesize_annotated, SeparationParams};
use verislm_core::scorer::ModelBackendRef;
use verislm_core::{Pipeline, PipelineConfig, Strategy, VerificationRequest, VerifyOptions};

fn pipeline(strategy: Strategy, latency_us: u64) -> (Pipeline, verislm_core::DatasetManifest) {
    let corpus = synthesize_annotated(1, 60);
    let backends = (0..3)
        .map(|m| {
            let mut table = separation_mock_table(&corpus, SeparationParams::default(), m);
            table.latency_us = latency_us;
            ModelBackendRef::mock(format!("m{m}"), table)
        })
        .collect();
    let mut config = PipelineConfig::new(backends);
    config.execution = strategy;
    let p = Pipeline::new(config).unwrap();
    p.calibrate(&corpus.manifest).unwrap();
    (p, corpus.manifest)
}

fn batch_scoring(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluation_split");
    group.sample_size(10);
    for strategy in [Strategy::Sequential, Strategy::Parallel] {
        let (p, manifest) = pipeline(strategy, 50);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{strategy:?}")), &manifest, |b, m| {
            // Cached scores would hide the backend latency.
            b.iter(|| {
                p.scorer().cache().clear();
                p.score_evaluation_split(m, VerifyOptions::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn single_request(c: &mut Criterion) {
    let mut group = c.benchmark_group("single_request_fan_out");
    let response = (0..8).map(|i| format!("Sentence number {i} is here.")).collect::<Vec<_>>().join(" ");
    let req = VerificationRequest::new("What is here?", "Every numbered sentence is here.", response);
    for strategy in [Strategy::Sequential, Strategy::Parallel] {
        let (p, _) = pipeline(strategy, 200);
        group.bench_function(format!("{strategy:?}"), |b| {
            b.iter(|| {
                p.scorer().cache().clear();
                p.verify(&req).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, batch_scoring, single_request);
criterion_main!(benches);
