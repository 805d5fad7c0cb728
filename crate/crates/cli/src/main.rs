use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use verislm_core::dataset::{load_dataset, separation_mock_table, synthesize_annotated, SeparationParams, Split};
use verislm_core::scorer::ModelBackendRef;
use verislm_core::{
    Comparison, MeanKind, Mode, Pipeline, PipelineConfig, PipelineError, VerificationRequest, VerifyOptions,
};

#[derive(Parser)]
#[command(name = "verislm", version, about = "Score answers for hallucination against their context")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-model calibration profiles on the dataset's calibration split.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Score one response and print the report as JSON.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        question: String,
        #[arg(long)]
        context: String,
        #[arg(long)]
        response: String,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        mean: Option<MeanKind>,
    },
    /// Score the evaluation split and write metrics, curve and histogram files.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "wrong")]
        comparison: Comparison,
        #[arg(long)]
        mean: Option<MeanKind>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        out: PathBuf,
        /// Calibrate on the dataset first instead of reading the stored profiles.
        #[arg(long)]
        calibrate: bool,
    },
    /// Write a synthetic labeled dataset as JSONL.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = verislm_core::dataset::DEFAULT_QUESTIONS)]
        questions: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write a config whose mock backends separate true from false sentences.
        #[arg(long)]
        mock_config: Option<PathBuf>,
        #[arg(long, default_value_t = 2, requires = "mock_config")]
        models: usize,
    },
    /// Serve POST /v1/verify and GET /v1/health.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn open(config: &Path) -> Result<Pipeline, PipelineError> {
    Pipeline::open(PipelineConfig::load(config)?)
}

macro_rules! print_json {
    ($value:expr) => {
        println!("{}", serde_json::to_string_pretty(&$value).expect("serializable"))
    };
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Calibrate { config, dataset } => {
            let pipeline = Pipeline::new(PipelineConfig::load(&config)?)?;
            let manifest = load_dataset(&dataset)?;
            let store = pipeline.calibrate(&manifest)?;
            print_json!(store);
        }
        Command::Verify { config, question, context, response, mode, mean } => {
            let pipeline = open(&config)?;
            let report = pipeline
                .verify_with(&VerificationRequest::new(question, context, response), VerifyOptions { mode, mean })?;
            print_json!(report);
        }
        Command::Evaluate { config, dataset, comparison, mean, mode, out, calibrate } => {
            let pipeline = open(&config)?;
            let manifest = load_dataset(&dataset)?;
            if calibrate {
                pipeline.calibrate(&manifest)?;
            }
            let outcome = pipeline.run_experiment(&manifest, comparison, VerifyOptions { mode, mean })?;
            outcome.write_outputs(&out)?;
            print!("{}", outcome.metrics_json());
        }
        Command::Synth { seed, questions, out, mock_config, models } => {
            let corpus = synthesize_annotated(seed, questions);
            corpus.manifest.write(&out)?;
            if let Some(path) = &mock_config {
                let backends: Vec<ModelBackendRef> = (0..models.max(1))
                    .map(|m| {
                        let table = separation_mock_table(&corpus, SeparationParams::default(), seed * 100 + m as u64);
                        ModelBackendRef::mock(format!("mock-{}", m + 1), table)
                    })
                    .collect();
                let mut config = PipelineConfig::new(backends);
                config.calibration_store = Some(PathBuf::from("calibration.json"));
                std::fs::write(path, serde_json::to_string_pretty(&config).expect("config serializes") + "\n")?;
            }
            let calibration = corpus.manifest.records_in(Split::Calibration).count();
            print_json!(json!({
                "records": corpus.manifest.records.len(),
                "calibration": calibration,
                "evaluation": corpus.manifest.records.len() - calibration,
                "out": out,
            }));
        }
        Command::Serve { config, addr } => {
            let pipeline = Arc::new(open(&config)?);
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            runtime.block_on(verislm_core::service::serve(pipeline, addr))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
