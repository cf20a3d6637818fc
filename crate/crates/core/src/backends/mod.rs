//! Text-generation backends and prompt templates.
//!
//! Every source of nondeterminism in the runtime sits behind the [`Backend`]
//! trait: the mock summarizer and replay backend are fully deterministic, the
//! HTTP backend talks to a chat-completions endpoint. Prompt rendering is a
//! pure function of its inputs so that transcripts are reproducible.

mod http;
mod mock;
mod replay;

pub use http::HttpChatBackend;
pub use mock::MockSummarizer;
pub use replay::{ReplayBackend, ReplayRecord};

use crate::memory::MemoryState;
use crate::stream_model::{Clip, QueryEvent};
use crate::time::{DurationMs, TimeMs};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// System preamble shared by the thought and answer templates.
pub const ANALYST_PREAMBLE: &str = "You are a Streaming Video Analyst.";
/// Final-answer formatting instruction; answers are scored on the boxed span.
pub const BOXED_INSTRUCTION: &str = "Output the final answer in \\boxed{}";
/// Env var that overrides the configured chat-completions endpoint.
pub const BACKEND_URL_ENV: &str = "VST_BACKEND_URL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("replay trace exhausted after {calls} calls")]
    ReplayExhausted { calls: usize },
    #[error("replay trace invalid: {0}")]
    ReplayInvalid(String),
    #[error("http status {status}: {detail}")]
    HttpStatus { status: u16, detail: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// A single generation call: the flattened prompt, the structured role
/// messages, a token budget, and an optional completion deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub rendered_prompt: String,
    pub role_messages: Vec<ChatMessage>,
    pub max_new_tokens: u32,
    pub deadline: Option<TimeMs>,
}

impl GenerationRequest {
    /// Whether this request asks for a final answer rather than a streaming
    /// thought. Identified by the boxed-answer instruction in the prompt.
    pub fn is_answer_request(&self) -> bool {
        self.rendered_prompt.contains(BOXED_INSTRUCTION)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub text: String,
    pub issued_at: TimeMs,
    pub completed_at: TimeMs,
    pub token_count: u32,
    pub deadline_missed: bool,
}

impl GenerationResult {
    pub fn duration(&self) -> DurationMs {
        self.completed_at - self.issued_at
    }
}

/// A text generator. At most one generation is in flight per session; a
/// backend instance may be shared across sessions only if its implementation
/// says so (the HTTP backend is safe, the replay backend is per-session).
pub trait Backend: Send {
    fn name(&self) -> &str;

    /// Produce a completion for `request`, issued at `issued_at` on the
    /// session clock. `completed_at` must be `issued_at` plus the simulated or
    /// measured generation duration; `deadline_missed` is set when completion
    /// exceeds the request deadline.
    fn generate(
        &mut self,
        request: &GenerationRequest,
        issued_at: TimeMs,
    ) -> Result<GenerationResult, BackendError>;
}

pub(crate) fn finish_result(
    request: &GenerationRequest,
    issued_at: TimeMs,
    text: String,
    token_count: u32,
    duration: DurationMs,
) -> GenerationResult {
    let completed_at = issued_at + duration;
    GenerationResult {
        deadline_missed: request.deadline.is_some_and(|d| completed_at > d),
        text,
        issued_at,
        completed_at,
        token_count: token_count.max(1),
    }
}

/// Whitespace token estimate, never zero.
pub fn estimate_tokens(text: &str) -> u32 {
    (text.split_whitespace().count() as u32).max(1)
}

fn clip_block(clip: &Clip, captions: &[String]) -> String {
    let mut block = format!(
        "{} <clip {}: {} visual tokens>",
        clip.render_span(),
        clip.clip_index,
        clip.total_visual_tokens
    );
    if !captions.is_empty() {
        block.push_str("\n[captions: ");
        block.push_str(&captions.join(" | "));
        block.push(']');
    }
    block
}

fn request_from_user_content(user_content: String) -> GenerationRequest {
    let rendered_prompt = format!("{ANALYST_PREAMBLE}\n{user_content}");
    GenerationRequest {
        rendered_prompt,
        role_messages: vec![
            ChatMessage {
                role: Role::System,
                content: ANALYST_PREAMBLE.to_string(),
            },
            ChatMessage {
                role: Role::User,
                content: user_content,
            },
        ],
        max_new_tokens: 512,
        deadline: None,
    }
}

/// Streaming-thought prompt: memory block, then the clip's time span and
/// placeholder. Captions ride along for the mock and replay backends.
pub fn render_thought_prompt(
    memory: &MemoryState,
    clip: &Clip,
    captions: &[String],
) -> GenerationRequest {
    let user_content = format!("{}\n{}", memory.render(), clip_block(clip, captions));
    request_from_user_content(user_content)
}

/// Final-answer prompt: memory, current clip, query time, the problem, and the
/// boxed-answer instruction; always ends with `Your answer:`.
pub fn render_answer_prompt(
    memory: &MemoryState,
    clip: Option<&Clip>,
    captions: &[String],
    query: &QueryEvent,
) -> GenerationRequest {
    let clip_part = match clip {
        Some(clip) => clip_block(clip, captions),
        None => "<no video received>".to_string(),
    };
    let user_content = format!(
        "{}\n{}\nTime {}s Based on the provided Video Memory and the Current Video Clip, answer the following Problem.\n{}\n{}\nYour answer:",
        memory.render(),
        clip_part,
        query.query_time.render_secs(),
        query.question,
        BOXED_INSTRUCTION,
    );
    request_from_user_content(user_content)
}

/// Interior of the last complete `\boxed{...}` span, with balanced-brace
/// scanning; `None` when no complete span exists.
pub fn extract_boxed(text: &str) -> Option<String> {
    const MARKER: &str = "\\boxed{";
    let mut result = None;
    let mut search_from = 0;
    while let Some(pos) = text[search_from..].find(MARKER) {
        let content_start = search_from + pos + MARKER.len();
        let mut depth = 1u32;
        let mut content_end = None;
        for (offset, ch) in text[content_start..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        content_end = Some(content_start + offset);
                        break;
                    }
                }
                _ => {}
            }
        }
        match content_end {
            Some(end) => {
                result = Some(text[content_start..end].to_string());
                search_from = end + 1;
            }
            None => break,
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{MemoryState, EMPTY_MEMORY_MARKER};
    use crate::stream_model::ThoughtEntry;
    use proptest::prelude::*;

    fn clip(index: u32, start_ms: u64, end_ms: u64, tokens: u64) -> Clip {
        Clip {
            clip_index: index,
            frame_range: (0, 0),
            start_time: TimeMs(start_ms),
            end_time: TimeMs(end_ms),
            total_visual_tokens: tokens,
        }
    }

    #[test]
    fn thought_prompt_contains_marker_and_span() {
        let memory = MemoryState::new(16, 8000);
        let request = render_thought_prompt(&memory, &clip(1, 0, 12_500, 300), &[]);
        assert!(request.rendered_prompt.contains(EMPTY_MEMORY_MARKER));
        assert!(request.rendered_prompt.contains("Time 0.0-12.5s"));
        assert!(request.rendered_prompt.contains("<clip 1: 300 visual tokens>"));
        assert!(!request.is_answer_request());
        assert_eq!(request.role_messages[0].content, ANALYST_PREAMBLE);
    }

    #[test]
    fn memory_block_precedes_clip_block() {
        let memory = MemoryState::new(16, 8000)
            .update(&[ThoughtEntry::new(1, TimeMs(0), TimeMs(1000), "intro".into())])
            .unwrap();
        let request = render_thought_prompt(&memory, &clip(2, 1000, 2000, 120), &[]);
        let memory_pos = request.rendered_prompt.find("intro").unwrap();
        let clip_pos = request.rendered_prompt.find("<clip 2:").unwrap();
        assert!(memory_pos < clip_pos);
    }

    #[test]
    fn prompt_rendering_is_deterministic() {
        let memory = MemoryState::new(16, 8000);
        let c = clip(1, 0, 1000, 64);
        let a = render_thought_prompt(&memory, &c, &["a man".into(), "enters".into()]);
        let b = render_thought_prompt(&memory, &c, &["a man".into(), "enters".into()]);
        assert_eq!(a, b);
    }

    #[test]
    fn answer_prompt_shape() {
        let memory = MemoryState::new(16, 8000);
        let query = QueryEvent {
            query_time: TimeMs(30_000),
            question: "What is happening?".into(),
            gold_answer: None,
        };
        let request = render_answer_prompt(&memory, Some(&clip(3, 20_000, 29_000, 90)), &[], &query);
        assert!(request.is_answer_request());
        assert!(request.rendered_prompt.contains("Time 30.0s Based on the provided Video Memory"));
        assert!(request.rendered_prompt.ends_with("Your answer:"));
        let lines: Vec<&str> = request.rendered_prompt.lines().collect();
        assert_eq!(lines[lines.len() - 2], BOXED_INSTRUCTION);

        // Empty memory still renders a well-formed prompt.
        assert!(request.rendered_prompt.contains(EMPTY_MEMORY_MARKER));
    }

    #[test]
    fn extract_boxed_cases() {
        assert_eq!(extract_boxed("so \\boxed{A}"), Some("A".into()));
        assert_eq!(extract_boxed("\\boxed{1} then \\boxed{2}"), Some("2".into()));
        assert_eq!(extract_boxed("no box"), None);
        assert_eq!(extract_boxed("\\boxed{a{b}c}"), Some("a{b}c".into()));
        assert_eq!(extract_boxed("\\boxed{unclosed"), None);
        assert_eq!(extract_boxed("\\boxed{ok} \\boxed{unclosed"), Some("ok".into()));
    }

    proptest! {
        #[test]
        fn boxed_round_trip(content in "[a-zA-Z0-9 ,.]{0,40}") {
            let injected = format!("reasoning first. \\boxed{{{content}}} trailing");
            prop_assert_eq!(extract_boxed(&injected), Some(content));
        }
    }
}
