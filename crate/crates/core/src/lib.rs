//! Streaming-thought runtime and toolkit.
//!
//! A model-agnostic implementation of clip-bounded streaming thinking over a
//! token stream: frames accumulate into capacity-bounded clips, each closed
//! clip produces a textual thought that lands in a FIFO long-term memory, and
//! a user query is answered directly from that memory plus the latest clip,
//! so query latency covers only the final answer. The training-side
//! machinery (streaming attention masks, sequence packing with loss masks,
//! the group-relative clipped policy objective) and a knowledge-graph QA
//! synthesis pipeline ship alongside, all deterministic at desk scale.

pub mod attention_mask;
pub mod backends;
pub mod kg;
pub mod latency_sim;
pub mod memory;
pub mod orchestrator;
pub mod rl_objective;
pub mod segmenter;
pub mod sft_packer;
pub mod stream_model;
pub mod time;
pub mod trace;

pub use memory::MemoryState;
pub use orchestrator::{
    measure_latency, run_session, QaLatencyReport, SessionDriver, SessionRun, SessionTranscript,
};
pub use stream_model::{
    AnswerRecord, Clip, ClockMode, DeadlinePolicy, FrameRecord, QueryEvent, SessionConfig,
    ThoughtEntry,
};
pub use time::{DurationMs, TimeMs};
