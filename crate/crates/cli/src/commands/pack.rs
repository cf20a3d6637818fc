use crate::CliError;
use clap::Args;
use std::path::PathBuf;
use vst_core::memory::MemoryState;
use vst_core::segmenter::segment_all;
use vst_core::sft_packer::{
    build_sequence, segment_sequence, to_packed_record, WordCountEstimator,
};
use vst_core::stream_model::{FrameRecord, QueryEvent, ThoughtEntry};
use vst_core::time::TimeMs;
use vst_core::trace;

#[derive(Args)]
pub struct PackArgs {
    /// Frame trace (line-delimited frame records)
    #[arg(long)]
    pub frames: PathBuf,
    /// Thoughts, one snapshot record per non-final clip
    #[arg(long)]
    pub thoughts: PathBuf,
    /// The training query text
    #[arg(long)]
    pub query: String,
    /// The ground-truth answer text
    #[arg(long)]
    pub answer: String,
    /// Clip capacity in visual tokens
    #[arg(long = "L", default_value_t = 2048)]
    pub l: u32,
    /// Token cap per packed segment
    #[arg(long, default_value_t = 8192)]
    pub segment_cap: u64,
    /// Token estimate per whitespace word
    #[arg(long, default_value_t = 1.3)]
    pub tokens_per_word: f64,
    #[arg(long, default_value_t = 16)]
    pub memory_budget_entries: usize,
    #[arg(long, default_value_t = 8000)]
    pub memory_budget_chars: usize,
}

pub fn run(args: PackArgs) -> Result<(), CliError> {
    let frames: Vec<FrameRecord> = trace::read_jsonl_file(&args.frames)?;
    let clips = segment_all(&frames, args.l).map_err(|e| CliError::Validation(e.to_string()))?;
    if clips.is_empty() {
        return Err(CliError::Validation("frame trace yields no clips".into()));
    }
    let thoughts: Vec<ThoughtEntry> = trace::read_jsonl_file(&args.thoughts)?;
    let query = QueryEvent {
        query_time: clips.last().map(|c| c.end_time).unwrap_or(TimeMs::ZERO),
        question: args.query,
        gold_answer: None,
    };
    let sequence = build_sequence(
        &clips,
        &thoughts,
        query,
        args.answer,
        MemoryState::new(args.memory_budget_entries, args.memory_budget_chars),
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;
    let estimator = WordCountEstimator { tokens_per_word: args.tokens_per_word };
    let segments = segment_sequence(&sequence, args.segment_cap, &estimator)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    for segment in &segments {
        let record = to_packed_record(segment);
        println!(
            "{}",
            serde_json::to_string(&record).map_err(|e| CliError::Runtime(e.to_string()))?
        );
    }
    eprintln!(
        "packed {} clips + {} thoughts into {} segments (cap {})",
        clips.len(),
        thoughts.len(),
        segments.len(),
        args.segment_cap,
    );
    Ok(())
}
