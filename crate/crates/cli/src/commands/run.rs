use crate::config::{CliConfig, ConfigOverrides};
use crate::CliError;
use clap::Args;
use std::path::PathBuf;
use vst_core::orchestrator::{measure_latency, run_session};
use vst_core::stream_model::{FrameRecord, QueryEvent};
use vst_core::trace;

#[derive(Args)]
pub struct RunArgs {
    /// Config file (flat key = value)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frame trace (line-delimited frame records)
    #[arg(long)]
    pub frames: PathBuf,
    /// Query trace (line-delimited query records)
    #[arg(long)]
    pub queries: PathBuf,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    args.overrides.apply(&mut config)?;

    let frames: Vec<FrameRecord> = trace::read_jsonl_file(&args.frames)?;
    let queries: Vec<QueryEvent> = trace::read_jsonl_file(&args.queries)?;
    if queries.is_empty() {
        return Err(CliError::Validation("query trace is empty".into()));
    }
    let report = vst_core::stream_model::validate_stream(&frames);
    if !report.is_empty() {
        let detail: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("frame {} ({}): {}", v.frame_index, v.field, v.message))
            .collect();
        return Err(CliError::Validation(format!(
            "frame trace is malformed:\n{}",
            detail.join("\n")
        )));
    }

    let gold: Vec<String> = queries.iter().filter_map(|q| q.gold_answer.clone()).collect();
    let mut backend = config.build_backend(gold)?;

    match run_session(&config.session, &frames, &queries, backend.as_mut()) {
        Ok(run) => {
            print!("{}", run.transcript.to_jsonl());
            match measure_latency(&run.transcript) {
                Ok(report) => eprintln!(
                    "{} answers; first-query qa_latency {:.3}s, thinking total {:.3}s (overlapped {:.3}s), {} deadline misses",
                    run.answers.len(),
                    report.qa_latency.as_secs_f64(),
                    report.thinking_time_total.as_secs_f64(),
                    report.thinking_time_overlapped.as_secs_f64(),
                    report.deadline_misses,
                ),
                Err(e) => eprintln!("{} answers; latency not measurable: {e}", run.answers.len()),
            }
            Ok(())
        }
        Err(abort) => {
            // Preserve the partial transcript on stdout before failing.
            print!("{}", abort.transcript().to_jsonl());
            Err(CliError::Runtime(abort.to_string()))
        }
    }
}
