//! Multi-hop QA synthesis from evidence chains, and the five-check rubric.

use super::bank::strip_code_fences;
use super::{EvidenceChain, KgError, KnowledgeGraph, SynthesizedQA};
use crate::backends::{Backend, ChatMessage, GenerationRequest, Role};
use crate::time::TimeMs;
use serde::Deserialize;
use std::collections::BTreeSet;

/// Words the synthesized text must never use; segments are referenced by time
/// interval or event description instead.
pub const BANNED_TOKENS: [&str; 3] = ["Step", "Clip index", "Path node"];

const DEFAULT_DIMENSIONS: &str = "causal, temporal, spatial, intent";

fn render_chain(chain: &EvidenceChain) -> String {
    chain
        .edges
        .iter()
        .map(|edge| {
            format!(
                "- {} --[{}]--> {} ({}): {}",
                edge.head,
                edge.relation,
                edge.tail,
                edge.render_span(),
                edge.description
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// QA-synthesis prompt over one evidence chain. Node order in the chain is a
/// reasoning order, not chronological order; the generated text must refer to
/// segments by time interval or description only.
pub fn render_qa_prompt(chain: &EvidenceChain, graph: &KnowledgeGraph) -> GenerationRequest {
    let system = "You are a Cognitive Video Intelligence Engine. Your task is to synthesize a \
                  Practical Deep Reasoning Question-Answer Pair based on the provided visual \
                  information from video segments and the Event Reasoning Path.";
    let user = format!(
        "=== CORE DEFINITION ===\n\
         1. Event Reasoning Path Nature: the video segments below are ordered by logical reasoning relevance, NOT by their original chronological time sequence.\n\
         2. Time Reference Rule: all time mentions must be based on the explicit time interval of each node.\n\
         3. Multi-hop Foundation: the reasoning must rely on logical connections between segments.\n\
         === MANDATORY INSTRUCTIONS ===\n\
         1. Strict Multi-hop Reasoning: the question MUST require integrating information from multiple video segments in the reasoning path.\n\
         2. Natural Language Constraint: DO NOT use the words \"Step\", \"Clip index\", \"Path node\". Refer to segments using their time intervals or event descriptions.\n\
         3. Reasoning Dimensions: construct the reasoning chain using one or more of: {DEFAULT_DIMENSIONS}.\n\
         4. Practicality Requirement: the question must be meaningful for understanding the video's narrative, intent, or physical logic.\n\
         === KNOWN GRAPH ===\n\
         {node_count} entities, {edge_count} relations.\n\
         === EVENT REASONING PATH ===\n\
         {chain}\n\
         === OUTPUT FORMAT (JSON ONLY, NO EXTRA TEXT) ===\n\
         {{\"question\": \"...\", \"cot\": [\"...\"], \"answer\": \"...\", \"reasoning_type\": \"...\"}}",
        node_count = graph.node_count(),
        edge_count = graph.edge_count(),
        chain = render_chain(chain),
    );
    GenerationRequest {
        rendered_prompt: format!("{system}\n{user}"),
        role_messages: vec![
            ChatMessage { role: Role::System, content: system.to_string() },
            ChatMessage { role: Role::User, content: user },
        ],
        max_new_tokens: 1024,
        deadline: None,
    }
}

#[derive(Debug, Deserialize)]
struct RawQa {
    question: Option<String>,
    cot: Option<serde_json::Value>,
    answer: Option<String>,
    reasoning_type: Option<String>,
}

fn cot_spans(value: serde_json::Value) -> Vec<String> {
    match value {
        serde_json::Value::String(text) => text
            .lines()
            .map(|line| line.trim().to_string())
            .filter(|line| !line.is_empty())
            .collect(),
        serde_json::Value::Array(items) => items
            .into_iter()
            .filter_map(|item| match item {
                serde_json::Value::String(s) if !s.trim().is_empty() => Some(s),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Prompt the backend over a chain and parse its reply into a QA item. Every
/// cot span must cite a time interval present in the source chain.
pub fn synthesize_qa(
    chain: &EvidenceChain,
    graph: &KnowledgeGraph,
    backend: &mut dyn Backend,
) -> Result<SynthesizedQA, KgError> {
    let request = render_qa_prompt(chain, graph);
    let result = backend.generate(&request, TimeMs::ZERO)?;
    let raw = result.text;
    let parsed: RawQa = serde_json::from_str(strip_code_fences(&raw)).map_err(|e| {
        KgError::UnparseableResponse { detail: e.to_string(), raw: raw.clone() }
    })?;

    let question = parsed
        .question
        .filter(|q| !q.trim().is_empty())
        .ok_or_else(|| KgError::MissingField { field: "question", raw: raw.clone() })?;
    let answer = parsed
        .answer
        .filter(|a| !a.trim().is_empty())
        .ok_or_else(|| KgError::MissingField { field: "answer", raw: raw.clone() })?;
    let cot_value = parsed
        .cot
        .ok_or_else(|| KgError::MissingField { field: "cot", raw: raw.clone() })?;
    let streaming_cot = cot_spans(cot_value);
    if streaming_cot.is_empty() {
        return Err(KgError::MissingField { field: "cot", raw });
    }
    let reasoning_type = parsed.reasoning_type.unwrap_or_else(|| "multi_hop".to_string());

    let intervals: BTreeSet<String> = chain.edges.iter().map(|e| e.render_span()).collect();
    for (index, span) in streaming_cot.iter().enumerate() {
        if !intervals.iter().any(|interval| span.contains(interval.as_str())) {
            return Err(KgError::UncitedSpan { index, span: span.clone() });
        }
    }

    Ok(SynthesizedQA {
        question,
        streaming_cot,
        answer,
        reasoning_type,
        chain_id: chain.chain_id,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The delegated backend could not be consulted; the item is quarantined.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckVerdict {
    pub name: &'static str,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDecision {
    Accept,
    Reject,
    Quarantine,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FilterOutcome {
    pub decision: FilterDecision,
    pub checks: Vec<CheckVerdict>,
}

/// Banned-token scan with word boundaries: a match must not be preceded by an
/// alphanumeric character nor followed by a lowercase letter, so "Step 3"
/// trips while "Stephen" and "Steps" pass.
fn contains_banned_token(text: &str, token: &str) -> bool {
    let mut search_from = 0;
    while let Some(pos) = text[search_from..].find(token) {
        let start = search_from + pos;
        let end = start + token.len();
        let before_ok = start == 0
            || !text[..start]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_alphanumeric());
        let after_ok = !text[end..].chars().next().is_some_and(|c| c.is_lowercase());
        if before_ok && after_ok {
            return true;
        }
        search_from = end;
    }
    false
}

fn normalize_sentence(sentence: &str) -> String {
    sentence.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Sentence boundaries: `.`, `!`, or `?` followed by whitespace or
/// end-of-text, so decimals like `2.0s` do not split.
fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((idx, ch)) = chars.next() {
        let at_boundary = matches!(ch, '.' | '!' | '?')
            && chars.peek().is_none_or(|(_, next)| next.is_whitespace());
        if at_boundary || ch == '\n' {
            sentences.push(&text[start..idx]);
            start = idx + ch.len_utf8();
        }
    }
    if start < text.len() {
        sentences.push(&text[start..]);
    }
    sentences
}

fn format_alignment_check(qa: &SynthesizedQA) -> CheckVerdict {
    let mut problems = Vec::new();
    if qa.question.trim().is_empty() {
        problems.push("question is empty".to_string());
    }
    if qa.answer.trim().is_empty() {
        problems.push("answer is empty".to_string());
    }
    if qa.streaming_cot.is_empty() {
        problems.push("cot is empty".to_string());
    }
    if qa.reasoning_type.trim().is_empty() {
        problems.push("reasoning_type is empty".to_string());
    }
    let full_text = full_text(qa);
    for token in BANNED_TOKENS {
        if contains_banned_token(&full_text, token) {
            problems.push(format!("banned token \"{token}\" present"));
        }
    }
    CheckVerdict {
        name: "format_alignment",
        status: if problems.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
        detail: if problems.is_empty() { None } else { Some(problems.join("; ")) },
    }
}

fn repetition_check(qa: &SynthesizedQA) -> CheckVerdict {
    let mut seen = BTreeSet::new();
    let full_text = full_text(qa);
    for sentence in split_sentences(&full_text) {
        let normalized = normalize_sentence(sentence);
        if normalized.is_empty() {
            continue;
        }
        if !seen.insert(normalized.clone()) {
            return CheckVerdict {
                name: "repetition",
                status: CheckStatus::Fail,
                detail: Some(format!("sentence repeated verbatim: {normalized}")),
            };
        }
    }
    CheckVerdict { name: "repetition", status: CheckStatus::Pass, detail: None }
}

fn full_text(qa: &SynthesizedQA) -> String {
    let mut text = qa.question.clone();
    for span in &qa.streaming_cot {
        text.push('\n');
        text.push_str(span);
    }
    text.push('\n');
    text.push_str(&qa.answer);
    text
}

fn delegated_check(
    name: &'static str,
    instruction: &str,
    qa: &SynthesizedQA,
    backend: &mut dyn Backend,
) -> CheckVerdict {
    let system = format!("RUBRIC CHECK: {name}. {instruction} Respond with PASS or FAIL and a short reason.");
    let user = format!(
        "Question: {}\nReasoning: {}\nAnswer: {}",
        qa.question,
        qa.streaming_cot.join(" "),
        qa.answer
    );
    let request = GenerationRequest {
        rendered_prompt: format!("{system}\n{user}"),
        role_messages: vec![
            ChatMessage { role: Role::System, content: system },
            ChatMessage { role: Role::User, content: user },
        ],
        max_new_tokens: 64,
        deadline: None,
    };
    match backend.generate(&request, TimeMs::ZERO) {
        Ok(result) => {
            let upper = result.text.to_uppercase();
            let pass_at = upper.find("PASS");
            let fail_at = upper.find("FAIL");
            let status = match (pass_at, fail_at) {
                (Some(p), Some(f)) => {
                    if p < f { CheckStatus::Pass } else { CheckStatus::Fail }
                }
                (Some(_), None) => CheckStatus::Pass,
                (None, Some(_)) => CheckStatus::Fail,
                (None, None) => CheckStatus::Indeterminate,
            };
            CheckVerdict {
                name,
                status,
                detail: if status == CheckStatus::Pass { None } else { Some(result.text) },
            }
        }
        Err(error) => CheckVerdict {
            name,
            status: CheckStatus::Indeterminate,
            detail: Some(format!("backend failed: {error}")),
        },
    }
}

/// Run the five checks. Format alignment and repetition are evaluated
/// locally; world knowledge, logical consistency, and thought validation are
/// delegated to the rubric backend. Any failure rejects; an indeterminate
/// delegated check quarantines the item.
pub fn filter_qa(qa: &SynthesizedQA, rubric_backend: &mut dyn Backend) -> FilterOutcome {
    let mut checks = vec![
        delegated_check(
            "world_knowledge",
            "Check the item against general world knowledge.",
            qa,
            rubric_backend,
        ),
        format_alignment_check(qa),
        delegated_check(
            "logical_consistency",
            "Check that the reasoning chain logically supports the answer.",
            qa,
            rubric_backend,
        ),
        repetition_check(qa),
        delegated_check(
            "thought_validation",
            "Check that every reasoning span is grounded in the cited video evidence.",
            qa,
            rubric_backend,
        ),
    ];
    let any_fail = checks.iter().any(|c| c.status == CheckStatus::Fail);
    let any_indeterminate = checks.iter().any(|c| c.status == CheckStatus::Indeterminate);
    let decision = if any_fail {
        FilterDecision::Reject
    } else if any_indeterminate {
        FilterDecision::Quarantine
    } else {
        FilterDecision::Accept
    };
    checks.shrink_to_fit();
    FilterOutcome { decision, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendError, GenerationResult};
    use crate::kg::{EntityBank, EntityTriple, SceneClip};

    struct FixedBackend(String);
    impl Backend for FixedBackend {
        fn name(&self) -> &str {
            "fixed"
        }
        fn generate(
            &mut self,
            request: &GenerationRequest,
            issued_at: TimeMs,
        ) -> Result<GenerationResult, BackendError> {
            Ok(crate::backends::finish_result(
                request,
                issued_at,
                self.0.clone(),
                1,
                crate::time::DurationMs(0),
            ))
        }
    }

    struct FailingBackend;
    impl Backend for FailingBackend {
        fn name(&self) -> &str {
            "failing"
        }
        fn generate(
            &mut self,
            _request: &GenerationRequest,
            _issued_at: TimeMs,
        ) -> Result<GenerationResult, BackendError> {
            Err(BackendError::Transport("down".into()))
        }
    }

    fn fixture_chain() -> (EvidenceChain, KnowledgeGraph) {
        let triples = vec![
            EntityTriple {
                head: "cup".into(),
                relation: "on".into(),
                tail: "table".into(),
                start_time: TimeMs(0),
                end_time: TimeMs(2000),
                description: "a cup on a table".into(),
            },
            EntityTriple {
                head: "table".into(),
                relation: "near".into(),
                tail: "window".into(),
                start_time: TimeMs(5000),
                end_time: TimeMs(9000),
                description: "the table by the window".into(),
            },
        ];
        let clip = SceneClip {
            clip_id: 1,
            start_time: TimeMs(0),
            end_time: TimeMs(9000),
            description: "room".into(),
        };
        let bank = EntityBank::new().update(&clip, &triples, 3).unwrap();
        let graph = KnowledgeGraph::from_bank(&bank);
        let chain = EvidenceChain { chain_id: 0, edges: triples };
        (chain, graph)
    }

    fn clean_qa() -> SynthesizedQA {
        SynthesizedQA {
            question: "What sits near the window?".into(),
            streaming_cot: vec![
                "From 0.0s to 2.0s a cup rests on the table.".into(),
                "From 5.0s to 9.0s the table stands near the window.".into(),
            ],
            answer: "The cup on the table.".into(),
            reasoning_type: "spatial".into(),
            chain_id: 0,
        }
    }

    #[test]
    fn synthesis_parses_well_formed_reply() {
        let (chain, graph) = fixture_chain();
        let reply = r#"{"question": "What links the cup to the window?",
            "cot": ["During 0.0s to 2.0s the cup sits on the table.",
                    "During 5.0s to 9.0s that table is near the window."],
            "answer": "The table.", "reasoning_type": "spatial"}"#;
        let mut backend = FixedBackend(reply.into());
        let qa = synthesize_qa(&chain, &graph, &mut backend).unwrap();
        assert_eq!(qa.streaming_cot.len(), 2);
        assert_eq!(qa.chain_id, 0);
    }

    #[test]
    fn synthesis_rejects_missing_answer_preserving_raw() {
        let (chain, graph) = fixture_chain();
        let reply = r#"{"question": "q", "cot": ["0.0s to 2.0s x"]}"#;
        let mut backend = FixedBackend(reply.into());
        let err = synthesize_qa(&chain, &graph, &mut backend).unwrap_err();
        match err {
            KgError::MissingField { field: "answer", raw } => assert!(raw.contains("cot")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn synthesis_rejects_uncited_span() {
        let (chain, graph) = fixture_chain();
        let reply = r#"{"question": "q", "cot": ["this span cites nothing"], "answer": "a"}"#;
        let mut backend = FixedBackend(reply.into());
        let err = synthesize_qa(&chain, &graph, &mut backend).unwrap_err();
        assert!(matches!(err, KgError::UncitedSpan { index: 0, .. }));
    }

    #[test]
    fn clean_item_passes_all_five_checks() {
        let mut rubric = FixedBackend("PASS".into());
        let outcome = filter_qa(&clean_qa(), &mut rubric);
        assert_eq!(outcome.decision, FilterDecision::Accept);
        assert_eq!(outcome.checks.len(), 5);
        assert!(outcome.checks.iter().all(|c| c.status == CheckStatus::Pass));
    }

    #[test]
    fn banned_token_rejects() {
        let mut qa = clean_qa();
        qa.question = "What happens in Step 3?".into();
        let mut rubric = FixedBackend("PASS".into());
        let outcome = filter_qa(&qa, &mut rubric);
        assert_eq!(outcome.decision, FilterDecision::Reject);
        let format = outcome.checks.iter().find(|c| c.name == "format_alignment").unwrap();
        assert_eq!(format.status, CheckStatus::Fail);
    }

    #[test]
    fn banned_token_boundaries() {
        assert!(contains_banned_token("see Step 3", "Step"));
        assert!(contains_banned_token("Step", "Step"));
        assert!(!contains_banned_token("Stephen walks", "Step"));
        assert!(!contains_banned_token("the Steps creak", "Step"));
        assert!(!contains_banned_token("lockStep", "Step"));
        assert!(contains_banned_token("per Clip index 4", "Clip index"));
    }

    #[test]
    fn repeated_sentence_rejects() {
        let mut qa = clean_qa();
        qa.streaming_cot.push("From 0.0s to 2.0s a cup rests on the table.".into());
        let mut rubric = FixedBackend("PASS".into());
        let outcome = filter_qa(&qa, &mut rubric);
        assert_eq!(outcome.decision, FilterDecision::Reject);
        let repetition = outcome.checks.iter().find(|c| c.name == "repetition").unwrap();
        assert_eq!(repetition.status, CheckStatus::Fail);
    }

    #[test]
    fn delegated_fail_rejects_and_backend_outage_quarantines() {
        let mut rubric = FixedBackend("FAIL: implausible physics".into());
        let outcome = filter_qa(&clean_qa(), &mut rubric);
        assert_eq!(outcome.decision, FilterDecision::Reject);

        let outcome = filter_qa(&clean_qa(), &mut FailingBackend);
        assert_eq!(outcome.decision, FilterDecision::Quarantine);
        let delegated: Vec<_> = outcome
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::Indeterminate)
            .collect();
        assert_eq!(delegated.len(), 3);
    }
}
