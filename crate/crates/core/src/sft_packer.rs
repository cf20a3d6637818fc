//! Training-sequence packing.
//!
//! Builds the interleaved sequence `(m^0, (c^1, z^1), ..., (c^{K-1}, z^{K-1}),
//! c^K, q, y)`, slices it into segments under a token cap with the memory
//! state recomputed recursively at each cut, and emits per-token loss masks
//! that supervise exactly the thought and answer tokens.
//!
//! Token counts come from a pluggable estimator; the default is a whitespace
//! word count scaled by a configurable factor, so the packer carries no
//! tokenizer dependency.

use crate::memory::{MemoryError, MemoryState};
use crate::stream_model::{Clip, QueryEvent, ThoughtEntry};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PackError {
    #[error("expected one thought per non-final clip: {clips} clips need {} thoughts, got {thoughts}", clips - 1)]
    StructureMismatch { clips: usize, thoughts: usize },
    #[error("clip indices must be consecutive from 1: position {position} has index {found}, expected {expected}")]
    NonConsecutiveClips {
        position: usize,
        found: u32,
        expected: u32,
    },
    #[error("thought at position {position} has clip_index {found}, expected {expected}")]
    MisalignedThought {
        position: usize,
        found: u32,
        expected: u32,
    },
    #[error("no clips to pack")]
    EmptySequence,
    #[error("segment cap {cap} cannot hold pair for clip {clip_index} ({needed} tokens with carried memory)")]
    CapTooSmallForPair {
        clip_index: u32,
        needed: u64,
        cap: u64,
    },
    #[error("segment cap {cap} cannot hold the final clip, query, and answer ({needed} tokens with carried memory)")]
    CapTooSmallForTail { needed: u64, cap: u64 },
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("token {token_index} has no source attribution")]
    UnattributedToken { token_index: usize },
}

/// Estimates how many tokens a piece of text occupies.
pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> u64;
}

/// Whitespace word count scaled by a factor, rounded up. Never zero for
/// non-empty text.
#[derive(Debug, Clone, Copy)]
pub struct WordCountEstimator {
    pub tokens_per_word: f64,
}

impl Default for WordCountEstimator {
    fn default() -> Self {
        WordCountEstimator { tokens_per_word: 1.3 }
    }
}

impl TokenEstimator for WordCountEstimator {
    fn estimate(&self, text: &str) -> u64 {
        let words = text.split_whitespace().count();
        (words as f64 * self.tokens_per_word).ceil() as u64
    }
}

/// One element of the packed training sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum SftElement {
    InitialMemory(MemoryState),
    ClipTokens(Clip),
    Thought(ThoughtEntry),
    FinalClip(Clip),
    Query(QueryEvent),
    Answer(String),
}

/// The full interleaved sequence for one training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SftSequence {
    elements: Vec<SftElement>,
}

impl SftSequence {
    pub fn elements(&self) -> &[SftElement] {
        &self.elements
    }

    pub fn initial_memory(&self) -> &MemoryState {
        match &self.elements[0] {
            SftElement::InitialMemory(m) => m,
            _ => unreachable!("constructor guarantees the leading element"),
        }
    }

    /// The `(clip, thought)` pairs, excluding the final clip.
    pub fn pairs(&self) -> Vec<(&Clip, &ThoughtEntry)> {
        let mut pairs = Vec::new();
        let mut pending_clip = None;
        for element in &self.elements {
            match element {
                SftElement::ClipTokens(c) => pending_clip = Some(c),
                SftElement::Thought(z) => {
                    pairs.push((pending_clip.take().expect("clip precedes thought"), z));
                }
                _ => {}
            }
        }
        pairs
    }

    pub fn final_clip(&self) -> &Clip {
        self.elements
            .iter()
            .find_map(|e| match e {
                SftElement::FinalClip(c) => Some(c),
                _ => None,
            })
            .expect("constructor guarantees a final clip")
    }

    pub fn query(&self) -> &QueryEvent {
        self.elements
            .iter()
            .find_map(|e| match e {
                SftElement::Query(q) => Some(q),
                _ => None,
            })
            .expect("constructor guarantees a query")
    }

    pub fn answer(&self) -> &str {
        match self.elements.last() {
            Some(SftElement::Answer(y)) => y,
            _ => unreachable!("constructor guarantees the trailing answer"),
        }
    }
}

/// Assemble the sequence in canonical order. `clips` must end with the final
/// clip `c^K`; `thoughts[k]` pairs with `clips[k]` for `k < K-1`.
pub fn build_sequence(
    clips: &[Clip],
    thoughts: &[ThoughtEntry],
    query: QueryEvent,
    answer: String,
    initial_memory: MemoryState,
) -> Result<SftSequence, PackError> {
    if clips.is_empty() {
        return Err(PackError::EmptySequence);
    }
    if thoughts.len() + 1 != clips.len() {
        return Err(PackError::StructureMismatch {
            clips: clips.len(),
            thoughts: thoughts.len(),
        });
    }
    for (position, clip) in clips.iter().enumerate() {
        let expected = position as u32 + 1;
        if clip.clip_index != expected {
            return Err(PackError::NonConsecutiveClips {
                position,
                found: clip.clip_index,
                expected,
            });
        }
    }
    for (position, thought) in thoughts.iter().enumerate() {
        let expected = position as u32 + 1;
        if thought.clip_index != expected {
            return Err(PackError::MisalignedThought {
                position,
                found: thought.clip_index,
                expected,
            });
        }
    }

    let mut elements = Vec::with_capacity(clips.len() * 2 + 2);
    elements.push(SftElement::InitialMemory(initial_memory));
    for (clip, thought) in clips.iter().zip(thoughts.iter()) {
        elements.push(SftElement::ClipTokens(clip.clone()));
        elements.push(SftElement::Thought(thought.clone()));
    }
    elements.push(SftElement::FinalClip(clips.last().expect("non-empty").clone()));
    elements.push(SftElement::Query(query));
    elements.push(SftElement::Answer(answer));
    Ok(SftSequence { elements })
}

/// One consecutive segment of the sequence with its recomputed memory state.
#[derive(Debug, Clone, PartialEq)]
pub struct SftSegment {
    /// 1-based segment number.
    pub segment_index: u32,
    /// Memory carried into this segment: the initial memory folded over every
    /// thought before the segment's first pair.
    pub carried_memory: MemoryState,
    /// Slice of the original sequence: pairs, plus the tail items for the
    /// last segment.
    pub elements: Vec<SftElement>,
    /// Highest clip index whose pair lies at or before this segment's end.
    pub cut_off: u32,
}

/// Estimated token footprint of one element under the given estimator.
pub fn element_cost(element: &SftElement, estimator: &dyn TokenEstimator) -> u64 {
    match element {
        SftElement::InitialMemory(m) => estimator.estimate(&m.render()),
        SftElement::ClipTokens(c) | SftElement::FinalClip(c) => c.total_visual_tokens,
        SftElement::Thought(z) => estimator.estimate(&z.text),
        SftElement::Query(q) => estimator.estimate(&q.question),
        SftElement::Answer(y) => estimator.estimate(y),
    }
}

/// Greedy-maximal slicing under `max_tokens_per_segment`, with the memory
/// recursion applied at every cut.
pub fn segment_sequence(
    sequence: &SftSequence,
    max_tokens_per_segment: u64,
    estimator: &dyn TokenEstimator,
) -> Result<Vec<SftSegment>, PackError> {
    let cap = max_tokens_per_segment;
    let pairs = sequence.pairs();
    let tail_cost: u64 = sequence.final_clip().total_visual_tokens
        + estimator.estimate(&sequence.query().question)
        + estimator.estimate(sequence.answer());

    let mut segments: Vec<SftSegment> = Vec::new();
    let mut memory = sequence.initial_memory().clone();
    let mut current: Vec<SftElement> = Vec::new();
    let mut current_thoughts: Vec<ThoughtEntry> = Vec::new();
    let mut current_cost = estimator.estimate(&memory.render());
    let mut last_cut = 0u32;

    let close_segment = |segments: &mut Vec<SftSegment>,
                             memory: &mut MemoryState,
                             current: &mut Vec<SftElement>,
                             current_thoughts: &mut Vec<ThoughtEntry>,
                             cut_off: u32|
     -> Result<u64, PackError> {
        let carried = memory.clone();
        *memory = memory.update(current_thoughts)?;
        segments.push(SftSegment {
            segment_index: segments.len() as u32 + 1,
            carried_memory: carried,
            elements: std::mem::take(current),
            cut_off,
        });
        current_thoughts.clear();
        Ok(0)
    };

    for (clip, thought) in &pairs {
        let pair_cost = clip.total_visual_tokens + estimator.estimate(&thought.text);
        if !current.is_empty() && current_cost + pair_cost > cap {
            close_segment(
                &mut segments,
                &mut memory,
                &mut current,
                &mut current_thoughts,
                last_cut,
            )?;
            current_cost = estimator.estimate(&memory.render());
        }
        if current_cost + pair_cost > cap {
            return Err(PackError::CapTooSmallForPair {
                clip_index: clip.clip_index,
                needed: current_cost + pair_cost,
                cap,
            });
        }
        current.push(SftElement::ClipTokens((*clip).clone()));
        current.push(SftElement::Thought((*thought).clone()));
        current_thoughts.push((*thought).clone());
        current_cost += pair_cost;
        last_cut = clip.clip_index;
    }

    // Tail: final clip, query, answer ride with the last pairs when they fit.
    if !current.is_empty() && current_cost + tail_cost > cap {
        close_segment(
            &mut segments,
            &mut memory,
            &mut current,
            &mut current_thoughts,
            last_cut,
        )?;
        current_cost = estimator.estimate(&memory.render());
    }
    if current_cost + tail_cost > cap {
        return Err(PackError::CapTooSmallForTail {
            needed: current_cost + tail_cost,
            cap,
        });
    }
    current.push(SftElement::FinalClip(sequence.final_clip().clone()));
    current.push(SftElement::Query(sequence.query().clone()));
    current.push(SftElement::Answer(sequence.answer().to_string()));
    let final_cut = sequence.final_clip().clip_index.saturating_sub(1).max(last_cut);
    close_segment(
        &mut segments,
        &mut memory,
        &mut current,
        &mut current_thoughts,
        final_cut,
    )?;
    Ok(segments)
}

/// What a rendered token belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenSource {
    Memory,
    ClipVisual,
    ThoughtText,
    Query,
    Answer,
    Unattributed,
}

/// Estimator-aligned token stream for one segment; each token carries the
/// element it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRendering {
    pub tokens: Vec<TokenSource>,
}

/// Expand a segment into attributed tokens.
pub fn render_segment(segment: &SftSegment, estimator: &dyn TokenEstimator) -> SegmentRendering {
    let mut tokens = Vec::new();
    let mut extend = |source: TokenSource, count: u64| {
        tokens.extend(std::iter::repeat_n(source, count as usize));
    };
    extend(
        TokenSource::Memory,
        estimator.estimate(&segment.carried_memory.render()),
    );
    for element in &segment.elements {
        match element {
            SftElement::InitialMemory(m) => {
                extend(TokenSource::Memory, estimator.estimate(&m.render()))
            }
            SftElement::ClipTokens(c) | SftElement::FinalClip(c) => {
                extend(TokenSource::ClipVisual, c.total_visual_tokens)
            }
            SftElement::Thought(z) => {
                extend(TokenSource::ThoughtText, estimator.estimate(&z.text))
            }
            SftElement::Query(q) => extend(TokenSource::Query, estimator.estimate(&q.question)),
            SftElement::Answer(y) => extend(TokenSource::Answer, estimator.estimate(y)),
        }
    }
    SegmentRendering { tokens }
}

/// Per-token supervision flags, true exactly on thought and answer tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossMask {
    pub flags: Vec<bool>,
}

impl LossMask {
    pub fn supervised_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

pub fn loss_mask(rendering: &SegmentRendering) -> Result<LossMask, PackError> {
    let mut flags = Vec::with_capacity(rendering.tokens.len());
    for (token_index, source) in rendering.tokens.iter().enumerate() {
        let flag = match source {
            TokenSource::ThoughtText | TokenSource::Answer => true,
            TokenSource::Memory | TokenSource::ClipVisual | TokenSource::Query => false,
            TokenSource::Unattributed => {
                return Err(PackError::UnattributedToken { token_index })
            }
        };
        flags.push(flag);
    }
    Ok(LossMask { flags })
}

/// Wire form of one packed segment:
/// `{"segment_index": n, "carried_memory": [...], "elements": [...], "loss_spans": [[a,b], ...]}`.
#[derive(Debug, Serialize)]
pub struct PackedSegmentRecord {
    pub segment_index: u32,
    pub carried_memory: Vec<ThoughtEntry>,
    pub elements: Vec<serde_json::Value>,
    /// Character spans (half-open, char offsets) of supervised text within the
    /// segment's canonical rendering.
    pub loss_spans: Vec<(usize, usize)>,
}

/// Canonical text rendering of a segment plus the char spans of supervised
/// content (thought and answer text).
pub fn rendered_text_with_spans(segment: &SftSegment) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut chars = 0usize;
    let mut spans = Vec::new();
    let push = |text: &mut String, chars: &mut usize, piece: &str| {
        text.push_str(piece);
        *chars += piece.chars().count();
    };
    push(&mut text, &mut chars, &segment.carried_memory.render());
    push(&mut text, &mut chars, "\n");
    for element in &segment.elements {
        match element {
            SftElement::InitialMemory(m) => {
                push(&mut text, &mut chars, &m.render());
                push(&mut text, &mut chars, "\n");
            }
            SftElement::ClipTokens(c) | SftElement::FinalClip(c) => {
                let line = format!(
                    "<clip {}: {} visual tokens>\n",
                    c.clip_index, c.total_visual_tokens
                );
                push(&mut text, &mut chars, &line);
            }
            SftElement::Thought(z) => {
                let start = chars;
                push(&mut text, &mut chars, &z.text);
                spans.push((start, chars));
                push(&mut text, &mut chars, "\n");
            }
            SftElement::Query(q) => {
                let line = format!("Query: {}\n", q.question);
                push(&mut text, &mut chars, &line);
            }
            SftElement::Answer(y) => {
                let start = chars;
                push(&mut text, &mut chars, y);
                spans.push((start, chars));
            }
        }
    }
    (text, spans)
}

pub fn to_packed_record(segment: &SftSegment) -> PackedSegmentRecord {
    let (_, loss_spans) = rendered_text_with_spans(segment);
    let elements = segment
        .elements
        .iter()
        .map(|element| match element {
            SftElement::InitialMemory(m) => serde_json::json!({
                "type": "memory",
                "entries": m.entries(),
            }),
            SftElement::ClipTokens(c) => serde_json::json!({
                "type": "clip",
                "clip_index": c.clip_index,
                "visual_tokens": c.total_visual_tokens,
            }),
            SftElement::FinalClip(c) => serde_json::json!({
                "type": "final_clip",
                "clip_index": c.clip_index,
                "visual_tokens": c.total_visual_tokens,
            }),
            SftElement::Thought(z) => serde_json::json!({
                "type": "thought",
                "clip_index": z.clip_index,
                "text": z.text,
            }),
            SftElement::Query(q) => serde_json::json!({
                "type": "query",
                "question": q.question,
            }),
            SftElement::Answer(y) => serde_json::json!({
                "type": "answer",
                "text": y,
            }),
        })
        .collect();
    PackedSegmentRecord {
        segment_index: segment.segment_index,
        carried_memory: segment.carried_memory.entries().to_vec(),
        elements,
        loss_spans,
    }
}
