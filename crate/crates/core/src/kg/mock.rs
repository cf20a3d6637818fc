//! Deterministic stand-in for the data-synthesis backends.
//!
//! Dispatches on prompt markers: extraction prompts get naive
//! subject-verb-object triples parsed from the embedded scene description, QA
//! prompts get a question/cot/answer echoing the chain's entities and time
//! intervals, rubric checks pass, and refinement proposals are empty. Good
//! enough to drive the whole pipeline offline; real deployments swap in the
//! HTTP backend.

use crate::backends::{
    estimate_tokens, finish_result, Backend, BackendError, GenerationRequest, GenerationResult,
};
use crate::time::{DurationMs, TimeMs};

#[derive(Debug, Clone, Default)]
pub struct MockAnalyst;

impl MockAnalyst {
    pub fn new() -> Self {
        MockAnalyst
    }

    fn extraction_reply(prompt: &str) -> String {
        let description = prompt
            .lines()
            .rev()
            .find(|line| line.starts_with("[scene description: ") && line.ends_with(']'))
            .map(|line| &line["[scene description: ".len()..line.len() - 1])
            .unwrap_or("");
        let mut events = Vec::new();
        for sentence in description.split(['.', ';']) {
            let words: Vec<&str> = sentence.split_whitespace().collect();
            if words.len() < 3 {
                continue;
            }
            events.push(serde_json::json!({
                "subject": words[0],
                "relation": words[1],
                "object": words[2..].join(" "),
                "description": sentence.trim(),
            }));
        }
        serde_json::json!({ "events": events }).to_string()
    }

    fn qa_reply(prompt: &str) -> String {
        // Chain lines look like `- head --[rel]--> tail (a to b): desc`.
        struct Hop {
            head: String,
            tail: String,
            interval: String,
        }
        let mut hops = Vec::new();
        for line in prompt.lines() {
            let Some(rest) = line.strip_prefix("- ") else { continue };
            let Some((head, rest)) = rest.split_once(" --[") else { continue };
            let Some((_relation, rest)) = rest.split_once("]--> ") else { continue };
            let Some((tail, rest)) = rest.split_once(" (") else { continue };
            let Some((interval, _)) = rest.split_once(')') else { continue };
            hops.push(Hop {
                head: head.to_string(),
                tail: tail.to_string(),
                interval: interval.to_string(),
            });
        }
        if hops.is_empty() {
            return serde_json::json!({
                "question": "What is shown?",
                "cot": ["No evidence provided."],
                "answer": "unknown",
                "reasoning_type": "none",
            })
            .to_string();
        }
        let first = &hops[0];
        let last = &hops[hops.len() - 1];
        let question = format!(
            "How is {} connected to {} across the observed events?",
            first.head, last.tail
        );
        let cot: Vec<String> = hops
            .iter()
            .map(|hop| {
                format!(
                    "During {} the evidence links {} with {}.",
                    hop.interval, hop.head, hop.tail
                )
            })
            .collect();
        let answer = format!(
            "{} leads to {} through {} linked events.",
            first.head,
            last.tail,
            hops.len()
        );
        serde_json::json!({
            "question": question,
            "cot": cot,
            "answer": answer,
            "reasoning_type": "causal",
        })
        .to_string()
    }
}

impl Backend for MockAnalyst {
    fn name(&self) -> &str {
        "mock-analyst"
    }

    fn generate(
        &mut self,
        request: &GenerationRequest,
        issued_at: TimeMs,
    ) -> Result<GenerationResult, BackendError> {
        let prompt = &request.rendered_prompt;
        let text = if prompt.contains("Visual Scene Analyst") {
            Self::extraction_reply(prompt)
        } else if prompt.contains("Cognitive Video Intelligence Engine") {
            Self::qa_reply(prompt)
        } else if prompt.contains("RUBRIC CHECK") {
            "PASS".to_string()
        } else if prompt.contains("entity registry") {
            r#"{"merges": [], "removals": []}"#.to_string()
        } else {
            "ok".to_string()
        };
        let tokens = estimate_tokens(&text);
        Ok(finish_result(request, issued_at, text, tokens, DurationMs(0)))
    }
}
