//! Randomized-order DFS sampling of evidence chains.
//!
//! Each requested chain starts from a random node and walks depth-first with
//! shuffled edge order until it reaches the maximum hop count or dead-ends at
//! an acceptable depth. A candidate is kept only if its entity overlap with
//! every accepted chain stays below the bound; the restart budget caps how
//! hard sampling tries before returning a partial result.

use super::{chain_overlap, EvidenceChain, KgError, KnowledgeGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const DEFAULT_MIN_HOPS: usize = 3;
pub const DEFAULT_MAX_HOPS: usize = 8;
pub const DEFAULT_MAX_OVERLAP: f64 = 0.10;
const RESTARTS_PER_CHAIN: u32 = 200;

/// Sampling result: possibly fewer chains than requested, with diagnostics
/// explaining why.
#[derive(Debug, Clone)]
pub struct ChainSample {
    pub chains: Vec<EvidenceChain>,
    pub restarts_used: u32,
    pub diagnostics: Vec<String>,
}

/// Sample up to `count` chains of `min_hops..=max_hops` edges with pairwise
/// entity overlap below `max_overlap`. Deterministic for a fixed seed.
pub fn sample_chains(
    graph: &KnowledgeGraph,
    count: usize,
    min_hops: usize,
    max_hops: usize,
    max_overlap: f64,
    seed: u64,
) -> Result<ChainSample, KgError> {
    if graph.node_count() == 0 {
        return Err(KgError::EmptyGraph);
    }
    if min_hops == 0 || max_hops < min_hops {
        return Err(KgError::BadHopRange { min: min_hops, max: max_hops });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = ChainSample {
        chains: Vec::new(),
        restarts_used: 0,
        diagnostics: Vec::new(),
    };

    'chains: for _ in 0..count {
        for attempt in 0..RESTARTS_PER_CHAIN {
            let start = rng.gen_range(0..graph.node_count());
            let Some(path) = dfs_path(graph, start, min_hops, max_hops, &mut rng) else {
                sample.restarts_used += 1;
                continue;
            };
            let candidate = EvidenceChain {
                chain_id: sample.chains.len() as u32,
                edges: path
                    .iter()
                    .map(|&edge_index| {
                        let edge = graph.edge(edge_index);
                        super::EntityTriple {
                            head: graph.node_name(edge.head).to_string(),
                            relation: edge.relation.clone(),
                            tail: graph.node_name(edge.tail).to_string(),
                            start_time: edge.start_time,
                            end_time: edge.end_time,
                            description: edge.description.clone(),
                        }
                    })
                    .collect(),
            };
            let diverse = sample
                .chains
                .iter()
                .all(|accepted| chain_overlap(accepted, &candidate).unwrap_or(1.0) < max_overlap);
            if diverse {
                sample.chains.push(candidate);
                sample.restarts_used += attempt;
                continue 'chains;
            }
            sample.restarts_used += 1;
        }
        sample.diagnostics.push(format!(
            "restart budget ({RESTARTS_PER_CHAIN}) exhausted after {} accepted chains; \
             graph cannot yield another chain under overlap < {max_overlap}",
            sample.chains.len()
        ));
        break;
    }
    Ok(sample)
}

/// One randomized DFS walk: returns edge indices of a simple path with length
/// in `[min_hops, max_hops]`, preferring maximal depth.
fn dfs_path(
    graph: &KnowledgeGraph,
    start: usize,
    min_hops: usize,
    max_hops: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let mut visited = BTreeSet::from([start]);
    let mut path = Vec::new();
    if walk(graph, start, min_hops, max_hops, &mut visited, &mut path, rng) {
        Some(path)
    } else {
        None
    }
}

fn walk(
    graph: &KnowledgeGraph,
    node: usize,
    min_hops: usize,
    max_hops: usize,
    visited: &mut BTreeSet<usize>,
    path: &mut Vec<usize>,
    rng: &mut ChaCha8Rng,
) -> bool {
    if path.len() == max_hops {
        return true;
    }
    let mut candidates: Vec<usize> = graph
        .outgoing(node)
        .iter()
        .copied()
        .filter(|&edge_index| !visited.contains(&graph.edge(edge_index).tail))
        .collect();
    candidates.shuffle(rng);
    for edge_index in candidates {
        let next = graph.edge(edge_index).tail;
        visited.insert(next);
        path.push(edge_index);
        if walk(graph, next, min_hops, max_hops, visited, path, rng) {
            return true;
        }
        path.pop();
        visited.remove(&next);
    }
    path.len() >= min_hops
}
