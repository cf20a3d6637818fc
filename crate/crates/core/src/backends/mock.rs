//! Deterministic caption-driven backend for tests, demos, and golden runs.

use super::{
    estimate_tokens, finish_result, Backend, BackendError, GenerationRequest, GenerationResult,
};
use crate::time::{DurationMs, TimeMs};

/// Produces thoughts by concatenating the clip captions embedded in the
/// prompt, and answers by matching configured gold candidates against the
/// prompt content. Generation duration is simulated at a fixed token rate.
#[derive(Debug, Clone)]
pub struct MockSummarizer {
    tokens_per_second: f64,
    /// Optional cap on thought length, in characters.
    truncate_chars: Option<usize>,
    /// Candidate answers scanned, in order, against the prompt.
    gold_candidates: Vec<String>,
    fallback_answer: String,
}

impl MockSummarizer {
    pub fn new(tokens_per_second: f64) -> Self {
        MockSummarizer {
            tokens_per_second: if tokens_per_second > 0.0 {
                tokens_per_second
            } else {
                100.0
            },
            truncate_chars: None,
            gold_candidates: Vec::new(),
            fallback_answer: "unknown".to_string(),
        }
    }

    pub fn with_truncation(mut self, chars: usize) -> Self {
        self.truncate_chars = Some(chars);
        self
    }

    pub fn with_gold_candidates(mut self, candidates: Vec<String>) -> Self {
        self.gold_candidates = candidates;
        self
    }

    fn duration_for(&self, token_count: u32) -> DurationMs {
        DurationMs((f64::from(token_count) / self.tokens_per_second * 1000.0).round() as u64)
    }

    fn thought_text(&self, request: &GenerationRequest) -> String {
        let mut text = captions_in_prompt(&request.rendered_prompt)
            .unwrap_or_else(|| "No salient events.".to_string());
        if let Some(limit) = self.truncate_chars {
            if text.chars().count() > limit {
                text = text.chars().take(limit).collect();
            }
        }
        if text.is_empty() {
            text = "No salient events.".to_string();
        }
        text
    }

    fn answer_text(&self, request: &GenerationRequest) -> String {
        let haystack = request.rendered_prompt.to_lowercase();
        let matched = self
            .gold_candidates
            .iter()
            .find(|candidate| !candidate.is_empty() && haystack.contains(&candidate.to_lowercase()));
        let chosen = matched.unwrap_or(&self.fallback_answer);
        format!("The answer is \\boxed{{{chosen}}}.")
    }
}

/// Joined caption text from the last `[captions: a | b]` block of a prompt.
fn captions_in_prompt(prompt: &str) -> Option<String> {
    let line = prompt
        .lines()
        .rev()
        .find(|line| line.starts_with("[captions: ") && line.ends_with(']'))?;
    let interior = &line["[captions: ".len()..line.len() - 1];
    Some(
        interior
            .split(" | ")
            .collect::<Vec<_>>()
            .join(" ")
            .trim()
            .to_string(),
    )
}

impl Backend for MockSummarizer {
    fn name(&self) -> &str {
        "mock"
    }

    fn generate(
        &mut self,
        request: &GenerationRequest,
        issued_at: TimeMs,
    ) -> Result<GenerationResult, BackendError> {
        let text = if request.is_answer_request() {
            self.answer_text(request)
        } else {
            self.thought_text(request)
        };
        let token_count = estimate_tokens(&text);
        let duration = self.duration_for(token_count);
        Ok(finish_result(request, issued_at, text, token_count, duration))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{render_answer_prompt, render_thought_prompt};
    use crate::memory::MemoryState;
    use crate::stream_model::{Clip, QueryEvent};

    fn clip() -> Clip {
        Clip {
            clip_index: 1,
            frame_range: (0, 1),
            start_time: TimeMs(0),
            end_time: TimeMs(1000),
            total_visual_tokens: 200,
        }
    }

    #[test]
    fn thought_concatenates_captions() {
        let memory = MemoryState::new(16, 8000);
        let request =
            render_thought_prompt(&memory, &clip(), &["a man".into(), "enters".into()]);
        let mut backend = MockSummarizer::new(100.0);
        let result = backend.generate(&request, TimeMs(1000)).unwrap();
        assert_eq!(result.text, "a man enters");
        assert_eq!(result.issued_at, TimeMs(1000));
        // 3 whitespace tokens at 100 tok/s = 30 ms.
        assert_eq!(result.completed_at, TimeMs(1030));
    }

    #[test]
    fn truncation_caps_thought_length() {
        let memory = MemoryState::new(16, 8000);
        let request = render_thought_prompt(&memory, &clip(), &["abcdefghij".into()]);
        let mut backend = MockSummarizer::new(100.0).with_truncation(4);
        let result = backend.generate(&request, TimeMs(0)).unwrap();
        assert_eq!(result.text, "abcd");
    }

    #[test]
    fn answer_picks_first_gold_candidate_found_in_prompt() {
        let memory = MemoryState::new(16, 8000);
        let query = QueryEvent {
            query_time: TimeMs(2000),
            question: "who enters?".into(),
            gold_answer: None,
        };
        let request = render_answer_prompt(
            &memory,
            Some(&clip()),
            &["a man".into(), "enters".into()],
            &query,
        );
        let mut backend = MockSummarizer::new(100.0)
            .with_gold_candidates(vec!["a dog".into(), "a man".into()]);
        let result = backend.generate(&request, TimeMs(2000)).unwrap();
        assert_eq!(result.text, "The answer is \\boxed{a man}.");

        let mut no_match =
            MockSummarizer::new(100.0).with_gold_candidates(vec!["a dog".into()]);
        let result = no_match.generate(&request, TimeMs(2000)).unwrap();
        assert_eq!(result.text, "The answer is \\boxed{unknown}.");
    }

    #[test]
    fn missing_captions_fall_back() {
        let memory = MemoryState::new(16, 8000);
        let request = render_thought_prompt(&memory, &clip(), &[]);
        let mut backend = MockSummarizer::new(100.0);
        let result = backend.generate(&request, TimeMs(0)).unwrap();
        assert_eq!(result.text, "No salient events.");
    }
}
