use crate::config::{CliConfig, ConfigOverrides};
use crate::CliError;
use clap::Args;
use std::io::BufRead;
use std::path::PathBuf;
use vst_core::orchestrator::SessionDriver;
use vst_core::stream_model::{ClockMode, FrameRecord, QueryEvent};
use vst_core::time::TimeMs;
use vst_core::trace;

#[derive(Args)]
pub struct ChatArgs {
    /// Config file (flat key = value)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frame trace played as the session's video stream
    #[arg(long)]
    pub frames: PathBuf,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

/// Lines are questions; an optional `@<seconds>` prefix schedules the
/// question at that stream time (the trace plays up to it first). A bare
/// question is injected at the current clock. In real-time mode the clock is
/// wall time since startup.
pub fn run(args: ChatArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    args.overrides.apply(&mut config)?;

    let frames: Vec<FrameRecord> = trace::read_jsonl_file(&args.frames)?;
    let mut backend = config.build_backend(Vec::new())?;
    let wall_start = std::time::Instant::now();
    let mode = config.session.mode;
    let mut driver = SessionDriver::new(config.session, backend.as_mut())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    for frame in frames {
        driver.enqueue_frame(frame);
    }

    let stdin = std::io::stdin();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::Runtime(format!("stdin read failed: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (at, question) = parse_line(line)?;
        let inject_at = match at {
            Some(t) => t,
            None => match mode {
                ClockMode::RealTime => TimeMs(wall_start.elapsed().as_millis() as u64),
                ClockMode::VirtualClock => driver.clock(),
            },
        };
        if let Err(abort) = driver.run_until(inject_at) {
            eprintln!("backend failure: {abort}; continuing");
            continue;
        }
        let query_time = inject_at.max(driver.clock());
        let baseline = driver.answers().len();
        driver.enqueue_query(QueryEvent {
            query_time,
            question: question.to_string(),
            gold_answer: None,
        });
        match driver.run_until_answer(baseline) {
            Ok(()) => {
                let answer = &driver.answers()[baseline];
                let qa_latency_s =
                    (answer.answer_end_time - query_time).as_secs_f64();
                println!(
                    "{}",
                    serde_json::json!({
                        "question": question,
                        "answer": answer.text,
                        "boxed": answer.boxed_answer,
                        "qa_latency_s": qa_latency_s,
                    })
                );
            }
            Err(abort) => {
                eprintln!("backend failure: {abort}; continuing");
            }
        }
    }
    Ok(())
}

fn parse_line(line: &str) -> Result<(Option<TimeMs>, &str), CliError> {
    let Some(rest) = line.strip_prefix('@') else {
        return Ok((None, line));
    };
    let (time_part, question) = rest.split_once(char::is_whitespace).ok_or_else(|| {
        CliError::Validation(format!("expected `@<seconds> <question>`, got `{line}`"))
    })?;
    let secs: f64 = time_part.parse().map_err(|_| {
        CliError::Validation(format!("bad time `@{time_part}` (expected seconds)"))
    })?;
    Ok((Some(TimeMs::from_secs_f64(secs)), question.trim()))
}
