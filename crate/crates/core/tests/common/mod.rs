#![allow(dead_code)]

pub mod golden;

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;

use verislm_core::calibration::CalibrationProfile;
use verislm_core::dataset::{separation_mock_table, synthesize_annotated, SeparationParams, SyntheticCorpus};
use verislm_core::scorer::{MockTable, ModelBackendRef};
use verislm_core::{CalibrationStore, Pipeline, PipelineConfig};

pub const SYNTH_SEED: u64 = 1;
pub const SYNTH_QUESTIONS: usize = 120;

pub fn corpus() -> SyntheticCorpus {
    synthesize_annotated(SYNTH_SEED, SYNTH_QUESTIONS)
}

pub fn separation_table(corpus: &SyntheticCorpus, seed: u64) -> MockTable {
    separation_mock_table(corpus, SeparationParams::default(), seed)
}

/// Pipeline over `tables`, calibrated on the corpus' calibration split.
pub fn calibrated(corpus: &SyntheticCorpus, tables: Vec<(&str, MockTable)>) -> Pipeline {
    let backends = tables.into_iter().map(|(id, t)| ModelBackendRef::mock(id, t)).collect();
    let p = Pipeline::new(PipelineConfig::new(backends)).expect("valid config");
    p.calibrate(&corpus.manifest).expect("calibration succeeds");
    p
}

pub fn with_identity_profiles(p: Pipeline) -> Pipeline {
    let profiles = p.model_ids().into_iter().map(CalibrationProfile::identity).collect();
    p.set_calibration(CalibrationStore { profiles });
    p
}

/// Serves the router on an ephemeral port from a background runtime.
pub fn spawn_service(pipeline: Arc<Pipeline>) -> SocketAddr {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").expect("bind");
    listener.set_nonblocking(true).expect("nonblocking");
    let addr = listener.local_addr().expect("addr");
    thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            axum::serve(listener, verislm_core::service::router(pipeline)).await.expect("serve");
        });
    });
    addr
}
