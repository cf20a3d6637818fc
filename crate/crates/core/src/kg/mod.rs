//! Knowledge-graph data synthesis pipeline.
//!
//! Scene clips stream through a sliding-window entity bank that accumulates
//! `(head, relation, tail)` triples; the finished bank becomes a directed
//! graph, evidence chains are sampled from it as simple paths under a
//! pairwise entity-overlap bound, and each chain seeds a multi-hop QA item
//! that is screened by a five-check rubric before acceptance.
//!
//! Scene boundaries and triple extraction are inputs: extraction is either
//! replayed from a trace or delegated to a backend with the scene-analyst
//! prompt.

mod bank;
mod chains;
mod mock;
mod qa;

pub use bank::{extract_triples_via_backend, refine_bank, render_extraction_prompt, RefineOutcome};
pub use chains::{sample_chains, ChainSample, DEFAULT_MAX_HOPS, DEFAULT_MAX_OVERLAP, DEFAULT_MIN_HOPS};
pub use mock::MockAnalyst;
pub use qa::{filter_qa, render_qa_prompt, synthesize_qa, CheckStatus, CheckVerdict, FilterDecision, FilterOutcome};

use crate::backends::BackendError;
use crate::time::TimeMs;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("scene clip {clip_id} does not extend the timeline")]
    ClipOutOfOrder { clip_id: u32 },
    #[error("window size W must be at least 1")]
    ZeroWindow,
    #[error("extracted triple {index} references an empty entity")]
    EmptyEntity { index: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("chain has no entities")]
    EmptyChain,
    #[error("requested hop range [{min}, {max}] is invalid")]
    BadHopRange { min: usize, max: usize },
    #[error("backend response is missing `{field}`; raw response preserved: {raw}")]
    MissingField { field: &'static str, raw: String },
    #[error("backend response is not parseable JSON: {detail}; raw response preserved: {raw}")]
    UnparseableResponse { detail: String, raw: String },
    #[error("cot span {index} cites no time interval from the source chain: {span}")]
    UncitedSpan { index: usize, span: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// One scene clip of the source video. Wire form:
/// `{"clip_id": 1, "start_s": 0.0, "end_s": 4.2, "description": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneClip {
    pub clip_id: u32,
    #[serde(rename = "start_s", with = "crate::time::serde_secs")]
    pub start_time: TimeMs,
    #[serde(rename = "end_s", with = "crate::time::serde_secs")]
    pub end_time: TimeMs,
    pub description: String,
}

impl SceneClip {
    pub fn render_span(&self) -> String {
        format!(
            "{}s to {}s",
            self.start_time.render_secs(),
            self.end_time.render_secs()
        )
    }
}

/// A directed relation observed in one scene. Also the edge wire form:
/// `{"head": ..., "relation": ..., "tail": ..., "start_s": ..., "end_s": ..., "description": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(rename = "start_s", with = "crate::time::serde_secs")]
    pub start_time: TimeMs,
    #[serde(rename = "end_s", with = "crate::time::serde_secs")]
    pub end_time: TimeMs,
    #[serde(default)]
    pub description: String,
}

impl EntityTriple {
    /// Dedup identity: head/relation/tail and the time span, after whitespace
    /// normalization.
    pub fn dedup_key(&self) -> (String, String, String, u64, u64) {
        (
            normalize_ws(&self.head),
            normalize_ws(&self.relation),
            normalize_ws(&self.tail),
            self.start_time.0,
            self.end_time.0,
        )
    }

    pub fn render_span(&self) -> String {
        format!(
            "{}s to {}s",
            self.start_time.render_secs(),
            self.end_time.render_secs()
        )
    }
}

pub(crate) fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Extraction-trace record: one triple attributed to a scene clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub clip_id: u32,
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(rename = "start_s", with = "crate::time::serde_secs")]
    pub start_time: TimeMs,
    #[serde(rename = "end_s", with = "crate::time::serde_secs")]
    pub end_time: TimeMs,
    #[serde(default)]
    pub description: String,
}

impl ExtractionRecord {
    pub fn into_triple(self) -> EntityTriple {
        EntityTriple {
            head: self.head,
            relation: self.relation,
            tail: self.tail,
            start_time: self.start_time,
            end_time: self.end_time,
            description: self.description,
        }
    }
}

/// First and last time an entity was observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub first_seen: TimeMs,
    pub last_seen: TimeMs,
}

/// Sliding-window accumulator of entities and triples. Triples persist after
/// their clip leaves the window; the window only bounds which clips count as
/// "recent" during extraction prompting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityBank {
    entities: BTreeMap<String, EntityInfo>,
    triples: Vec<EntityTriple>,
    window: VecDeque<u32>,
    dedup: BTreeSet<(String, String, String, u64, u64)>,
    last_clip_id: Option<u32>,
}

impl EntityBank {
    pub fn new() -> Self {
        EntityBank::default()
    }

    pub fn entities(&self) -> &BTreeMap<String, EntityInfo> {
        &self.entities
    }

    pub fn triples(&self) -> &[EntityTriple] {
        &self.triples
    }

    /// Clip ids currently inside the window, oldest first.
    pub fn window(&self) -> impl Iterator<Item = u32> + '_ {
        self.window.iter().copied()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }
}

/// Node wire form for graph dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: String,
    #[serde(rename = "first_seen_s", with = "crate::time::serde_secs")]
    pub first_seen: TimeMs,
    #[serde(rename = "last_seen_s", with = "crate::time::serde_secs")]
    pub last_seen: TimeMs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub head: usize,
    pub tail: usize,
    pub relation: String,
    pub start_time: TimeMs,
    pub end_time: TimeMs,
    pub description: String,
}

/// Directed multigraph over bank entities. Node order is the sorted entity
/// name order, which keeps every downstream sampling step deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<String>,
    node_info: Vec<EntityInfo>,
    edges: Vec<GraphEdge>,
    outgoing: Vec<Vec<usize>>,
    skipped_self_loops: usize,
}

impl KnowledgeGraph {
    /// Build from a bank, skipping self-loop triples.
    pub fn from_bank(bank: &EntityBank) -> Self {
        let nodes: Vec<String> = bank.entities.keys().cloned().collect();
        let node_info: Vec<EntityInfo> = bank.entities.values().copied().collect();
        let index: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, name)| (name.as_str(), i))
            .collect();
        let mut edges = Vec::new();
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut skipped_self_loops = 0;
        for triple in &bank.triples {
            let (Some(&head), Some(&tail)) = (
                index.get(triple.head.as_str()),
                index.get(triple.tail.as_str()),
            ) else {
                continue;
            };
            if head == tail {
                skipped_self_loops += 1;
                continue;
            }
            outgoing[head].push(edges.len());
            edges.push(GraphEdge {
                head,
                tail,
                relation: triple.relation.clone(),
                start_time: triple.start_time,
                end_time: triple.end_time,
                description: triple.description.clone(),
            });
        }
        KnowledgeGraph {
            nodes,
            node_info,
            edges,
            outgoing,
            skipped_self_loops,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_name(&self, index: usize) -> &str {
        &self.nodes[index]
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    pub fn skipped_self_loops(&self) -> usize {
        self.skipped_self_loops
    }

    pub fn node_records(&self) -> Vec<NodeRecord> {
        self.nodes
            .iter()
            .zip(self.node_info.iter())
            .map(|(name, info)| NodeRecord {
                name: name.clone(),
                first_seen: info.first_seen,
                last_seen: info.last_seen,
            })
            .collect()
    }

    pub fn edge_records(&self) -> Vec<EntityTriple> {
        self.edges
            .iter()
            .map(|edge| EntityTriple {
                head: self.nodes[edge.head].clone(),
                relation: edge.relation.clone(),
                tail: self.nodes[edge.tail].clone(),
                start_time: edge.start_time,
                end_time: edge.end_time,
                description: edge.description.clone(),
            })
            .collect()
    }

    /// Does `edge_index` connect `from` to some node, in order, for path checks.
    pub fn edge(&self, edge_index: usize) -> &GraphEdge {
        &self.edges[edge_index]
    }
}

/// A simple path through the graph, with full edge attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceChain {
    pub chain_id: u32,
    pub edges: Vec<EntityTriple>,
}

impl EvidenceChain {
    /// Node names in path order: first head, then each tail.
    pub fn nodes(&self) -> Vec<&str> {
        let mut nodes = Vec::with_capacity(self.edges.len() + 1);
        if let Some(first) = self.edges.first() {
            nodes.push(first.head.as_str());
        }
        for edge in &self.edges {
            nodes.push(edge.tail.as_str());
        }
        nodes
    }

    pub fn entities(&self) -> BTreeSet<&str> {
        self.nodes().into_iter().collect()
    }

    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    /// Consecutive edges link head-to-tail and no node repeats.
    pub fn is_simple_path(&self) -> bool {
        if self.edges.is_empty() {
            return false;
        }
        for pair in self.edges.windows(2) {
            if pair[0].tail != pair[1].head {
                return false;
            }
        }
        let nodes = self.nodes();
        let unique: BTreeSet<&str> = nodes.iter().copied().collect();
        unique.len() == nodes.len()
    }
}

/// Entity overlap between two chains: intersection size over the smaller
/// chain's entity-set size.
pub fn chain_overlap(a: &EvidenceChain, b: &EvidenceChain) -> Result<f64, KgError> {
    let ea = a.entities();
    let eb = b.entities();
    if ea.is_empty() || eb.is_empty() {
        return Err(KgError::EmptyChain);
    }
    let intersection = ea.intersection(&eb).count();
    Ok(intersection as f64 / ea.len().min(eb.len()) as f64)
}

/// A synthesized multi-hop QA item. Wire form:
/// `{"question": ..., "cot": [...], "answer": ..., "reasoning_type": ..., "chain_id": N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizedQA {
    pub question: String,
    #[serde(rename = "cot")]
    pub streaming_cot: Vec<String>,
    pub answer: String,
    pub reasoning_type: String,
    pub chain_id: u32,
}
