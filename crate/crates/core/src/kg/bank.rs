//! Entity-bank maintenance: windowed updates, backend-driven extraction, and
//! registry refinement.

use super::{normalize_ws, EntityBank, EntityInfo, EntityTriple, KgError, SceneClip};
use crate::backends::{Backend, ChatMessage, GenerationRequest, Role};
use crate::time::TimeMs;
use serde::Deserialize;
use std::collections::BTreeSet;

impl EntityBank {
    /// Register one clip's extraction and slide the window to at most `w`
    /// clips. Triples persist after their clip leaves the window; duplicates
    /// (same head/relation/tail/time span after whitespace normalization) are
    /// stored once.
    pub fn update(
        &self,
        clip: &SceneClip,
        extraction: &[EntityTriple],
        w: usize,
    ) -> Result<EntityBank, KgError> {
        if w == 0 {
            return Err(KgError::ZeroWindow);
        }
        if let Some(last) = self.last_clip_id {
            if clip.clip_id <= last {
                return Err(KgError::ClipOutOfOrder { clip_id: clip.clip_id });
            }
        }
        for (index, triple) in extraction.iter().enumerate() {
            if normalize_ws(&triple.head).is_empty() || normalize_ws(&triple.tail).is_empty() {
                return Err(KgError::EmptyEntity { index });
            }
        }

        let mut bank = self.clone();
        for triple in extraction {
            let key = triple.dedup_key();
            if bank.dedup.contains(&key) {
                continue;
            }
            bank.dedup.insert(key);
            for name in [&triple.head, &triple.tail] {
                let name = normalize_ws(name);
                bank.entities
                    .entry(name)
                    .and_modify(|info| {
                        info.first_seen = info.first_seen.min(triple.start_time);
                        info.last_seen = info.last_seen.max(triple.end_time);
                    })
                    .or_insert(EntityInfo {
                        first_seen: triple.start_time,
                        last_seen: triple.end_time,
                    });
            }
            let mut stored = triple.clone();
            stored.head = normalize_ws(&triple.head);
            stored.relation = normalize_ws(&triple.relation);
            stored.tail = normalize_ws(&triple.tail);
            bank.triples.push(stored);
        }

        bank.window.push_back(clip.clip_id);
        while bank.window.len() > w {
            bank.window.pop_front();
        }
        bank.last_clip_id = Some(clip.clip_id);
        Ok(bank)
    }
}

/// Scene-analyst extraction prompt for one clip. The scene description rides
/// along as the video stand-in for text backends.
pub fn render_extraction_prompt(clip: &SceneClip, known_entities: &[String]) -> GenerationRequest {
    let registry = if known_entities.is_empty() {
        "(empty)".to_string()
    } else {
        known_entities.join(", ")
    };
    let system = "You are a Visual Scene Analyst specializing in dense scene graph generation. \
                  Your goal is to map ALL physical relationships in the video segment, not just human actions.";
    let user = format!(
        "[CURRENT TIMELINE] Segment {}: {}.\n\
         [CONTEXTUAL DATA] 1. Entity Registry: {}\n\
         [CRITICAL VISUAL EXTRACTION RULES] 1. NO \"HUB-AND-SPOKE\" BIAS: do not make the human protagonist the subject of every relation. \
         2. Object-to-Object Relationships: look for spatial relations, containment, and passive interactions. \
         3. Visual Entity Identification: identify objects using specific visual descriptors. NO PRONOUNS. \
         4. Action & State Verbs: use active verbs for humans and spatial/state verbs for objects. \
         5. Description: describe the scene layout and object states.\n\
         [OUTPUT FORMAT] Return ONLY a JSON object: {{\"events\": [{{\"subject\": \"...\", \"relation\": \"...\", \"object\": \"...\", \"description\": \"...\"}}]}}\n\
         [scene description: {}]",
        clip.clip_id,
        clip.render_span(),
        registry,
        clip.description,
    );
    GenerationRequest {
        rendered_prompt: format!("{system}\n{user}"),
        role_messages: vec![
            ChatMessage { role: Role::System, content: system.to_string() },
            ChatMessage { role: Role::User, content: user },
        ],
        max_new_tokens: 512,
        deadline: None,
    }
}

#[derive(Debug, Deserialize)]
struct ExtractionEvents {
    events: Vec<ExtractionEvent>,
}

#[derive(Debug, Deserialize)]
struct ExtractionEvent {
    subject: String,
    relation: String,
    object: String,
    #[serde(default)]
    description: String,
}

pub(crate) fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(stripped) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let stripped = stripped.strip_prefix("json").unwrap_or(stripped);
    stripped.strip_suffix("```").unwrap_or(stripped).trim()
}

/// Prompt the backend for one clip's triples and parse its JSON reply.
pub fn extract_triples_via_backend(
    clip: &SceneClip,
    known_entities: &[String],
    backend: &mut dyn Backend,
) -> Result<Vec<EntityTriple>, KgError> {
    let request = render_extraction_prompt(clip, known_entities);
    let result = backend.generate(&request, clip.end_time)?;
    let body = strip_code_fences(&result.text);
    let parsed: ExtractionEvents =
        serde_json::from_str(body).map_err(|e| KgError::UnparseableResponse {
            detail: e.to_string(),
            raw: result.text.clone(),
        })?;
    Ok(parsed
        .events
        .into_iter()
        .map(|event| EntityTriple {
            head: event.subject,
            relation: event.relation,
            tail: event.object,
            start_time: clip.start_time,
            end_time: clip.end_time,
            description: if event.description.is_empty() {
                clip.description.clone()
            } else {
                event.description
            },
        })
        .collect())
}

#[derive(Debug, Deserialize)]
struct RefineProposal {
    #[serde(default)]
    merges: Vec<MergeEntry>,
    #[serde(default)]
    removals: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct MergeEntry {
    from: String,
    into: String,
}

/// Result of a refinement pass. On backend failure the bank comes back
/// unmodified with the warning set.
#[derive(Debug)]
pub struct RefineOutcome {
    pub bank: EntityBank,
    pub merged_entities: usize,
    pub removed_entities: usize,
    pub dropped_triples: usize,
    pub warning: Option<String>,
}

fn render_refine_prompt(bank: &EntityBank) -> GenerationRequest {
    let system = "You curate an entity registry extracted from a video. \
                  Propose merges for duplicate entities and removals for noise such as subtitles.";
    let user = format!(
        "Entities: {}\n\
         Return ONLY a JSON object: {{\"merges\": [{{\"from\": \"...\", \"into\": \"...\"}}], \"removals\": [\"...\"]}}",
        bank.entities.keys().cloned().collect::<Vec<_>>().join(", "),
    );
    GenerationRequest {
        rendered_prompt: format!("{system}\n{user}"),
        role_messages: vec![
            ChatMessage { role: Role::System, content: system.to_string() },
            ChatMessage { role: Role::User, content: user },
        ],
        max_new_tokens: 512,
        deadline: None,
    }
}

/// Ask the backend for registry cleanup and apply it. Merges re-point triples
/// to the canonical name; removals drop the entity and its triples, which are
/// counted as dropped.
pub fn refine_bank(bank: &EntityBank, backend: &mut dyn Backend) -> RefineOutcome {
    let request = render_refine_prompt(bank);
    let response = match backend.generate(&request, TimeMs::ZERO) {
        Ok(result) => result.text,
        Err(error) => {
            return RefineOutcome {
                bank: bank.clone(),
                merged_entities: 0,
                removed_entities: 0,
                dropped_triples: 0,
                warning: Some(format!("refine backend failed, bank unmodified: {error}")),
            }
        }
    };
    let proposal: RefineProposal = match serde_json::from_str(strip_code_fences(&response)) {
        Ok(proposal) => proposal,
        Err(error) => {
            return RefineOutcome {
                bank: bank.clone(),
                merged_entities: 0,
                removed_entities: 0,
                dropped_triples: 0,
                warning: Some(format!("unparseable refine proposal, bank unmodified: {error}")),
            }
        }
    };

    let mut refined = bank.clone();
    let mut merged_entities = 0;
    for merge in &proposal.merges {
        let from = normalize_ws(&merge.from);
        let into = normalize_ws(&merge.into);
        if from == into || from.is_empty() || into.is_empty() {
            continue;
        }
        let Some(info) = refined.entities.remove(&from) else {
            continue;
        };
        merged_entities += 1;
        refined
            .entities
            .entry(into.clone())
            .and_modify(|existing| {
                existing.first_seen = existing.first_seen.min(info.first_seen);
                existing.last_seen = existing.last_seen.max(info.last_seen);
            })
            .or_insert(info);
        for triple in &mut refined.triples {
            if triple.head == from {
                triple.head = into.clone();
            }
            if triple.tail == from {
                triple.tail = into.clone();
            }
        }
    }

    let removals: BTreeSet<String> =
        proposal.removals.iter().map(|r| normalize_ws(r)).collect();
    let mut removed_entities = 0;
    for name in &removals {
        if refined.entities.remove(name).is_some() {
            removed_entities += 1;
        }
    }
    let before = refined.triples.len();
    refined
        .triples
        .retain(|t| !removals.contains(&t.head) && !removals.contains(&t.tail));
    let dropped_triples = before - refined.triples.len();

    // Re-pointing can create duplicate triples; collapse them.
    refined.dedup.clear();
    let mut unique = Vec::with_capacity(refined.triples.len());
    for triple in std::mem::take(&mut refined.triples) {
        let key = triple.dedup_key();
        if refined.dedup.insert(key) {
            unique.push(triple);
        }
    }
    refined.triples = unique;

    RefineOutcome {
        bank: refined,
        merged_entities,
        removed_entities,
        dropped_triples,
        warning: None,
    }
}
