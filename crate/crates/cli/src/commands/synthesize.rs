use crate::config::BackendKind;
use crate::CliError;
use clap::Args;
use std::collections::BTreeMap;
use std::path::PathBuf;
use vst_core::backends::{Backend, HttpChatBackend};
use vst_core::kg::{
    self, EntityBank, EntityTriple, ExtractionRecord, FilterDecision, KnowledgeGraph, MockAnalyst,
    SceneClip,
};
use vst_core::trace;

#[derive(Args)]
pub struct SynthesizeArgs {
    /// Scene-clip file (line-delimited clip records)
    #[arg(long)]
    pub scenes: PathBuf,
    /// Extraction trace; when absent, extraction is delegated to the backend
    #[arg(long)]
    pub extractions: Option<PathBuf>,
    /// Output directory for nodes/edges/chains/qa files
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chains to request
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = kg::DEFAULT_MIN_HOPS)]
    pub min_hops: usize,
    #[arg(long, default_value_t = kg::DEFAULT_MAX_HOPS)]
    pub max_hops: usize,
    /// Pairwise entity-overlap bound between accepted chains
    #[arg(long, default_value_t = kg::DEFAULT_MAX_OVERLAP)]
    pub max_overlap: f64,
    /// Sliding window size over scene clips
    #[arg(long = "window", default_value_t = 8)]
    pub window: usize,
    /// mock | http (extraction, refinement, QA synthesis, rubric checks)
    #[arg(long, default_value = "mock")]
    pub backend: String,
    #[arg(long)]
    pub backend_url: Option<String>,
    #[arg(long, default_value = "vst-7b")]
    pub backend_model: String,
}

fn build_backend(args: &SynthesizeArgs) -> Result<Box<dyn Backend>, CliError> {
    let kind: BackendKind = args.backend.parse().map_err(CliError::Validation)?;
    match kind {
        BackendKind::Mock => Ok(Box::new(MockAnalyst::new())),
        BackendKind::Http => {
            let url = args
                .backend_url
                .clone()
                .or_else(|| std::env::var(vst_core::backends::BACKEND_URL_ENV).ok())
                .ok_or_else(|| {
                    CliError::Validation(
                        "http backend needs --backend-url (or VST_BACKEND_URL)".into(),
                    )
                })?;
            Ok(Box::new(HttpChatBackend::new(&url, &args.backend_model)))
        }
        BackendKind::Replay => Err(CliError::Validation(
            "synthesize supports mock or http backends".into(),
        )),
    }
}

pub fn run(args: SynthesizeArgs) -> Result<(), CliError> {
    let scenes: Vec<SceneClip> = trace::read_jsonl_file(&args.scenes)?;
    if scenes.is_empty() {
        return Err(CliError::Validation("scene file is empty".into()));
    }
    let mut extraction_by_clip: BTreeMap<u32, Vec<EntityTriple>> = BTreeMap::new();
    if let Some(path) = &args.extractions {
        let records: Vec<ExtractionRecord> = trace::read_jsonl_file(path)?;
        for record in records {
            extraction_by_clip
                .entry(record.clip_id)
                .or_default()
                .push(record.into_triple());
        }
    }
    let mut backend = build_backend(&args)?;

    // Windowed bank construction.
    let mut bank = EntityBank::new();
    for scene in &scenes {
        let triples = match args.extractions {
            Some(_) => extraction_by_clip.remove(&scene.clip_id).unwrap_or_default(),
            None => {
                let known: Vec<String> = bank.entities().keys().cloned().collect();
                kg::extract_triples_via_backend(scene, &known, backend.as_mut())
                    .map_err(|e| CliError::Runtime(e.to_string()))?
            }
        };
        bank = bank
            .update(scene, &triples, args.window)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }

    // Registry refinement, then the graph.
    let refined = kg::refine_bank(&bank, backend.as_mut());
    if let Some(warning) = &refined.warning {
        eprintln!("warning: {warning}");
    } else {
        eprintln!(
            "refined registry: {} merges, {} removals, {} triples dropped",
            refined.merged_entities, refined.removed_entities, refined.dropped_triples,
        );
    }
    let graph = KnowledgeGraph::from_bank(&refined.bank);
    eprintln!(
        "graph: {} nodes, {} edges ({} self-loops skipped)",
        graph.node_count(),
        graph.edge_count(),
        graph.skipped_self_loops(),
    );

    let sample = kg::sample_chains(
        &graph,
        args.count,
        args.min_hops,
        args.max_hops,
        args.max_overlap,
        args.seed,
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;
    for diagnostic in &sample.diagnostics {
        eprintln!("warning: {diagnostic}");
    }

    // QA synthesis and rubric filtering per chain.
    let mut accepted = Vec::new();
    let mut rejected = 0usize;
    let mut quarantined = 0usize;
    for chain in &sample.chains {
        let qa = match kg::synthesize_qa(chain, &graph, backend.as_mut()) {
            Ok(qa) => qa,
            Err(error) => {
                eprintln!("chain {}: synthesis failed: {error}", chain.chain_id);
                continue;
            }
        };
        let outcome = kg::filter_qa(&qa, backend.as_mut());
        match outcome.decision {
            FilterDecision::Accept => accepted.push(qa),
            FilterDecision::Reject => {
                rejected += 1;
                let failures: Vec<String> = outcome
                    .checks
                    .iter()
                    .filter(|c| c.status == kg::CheckStatus::Fail)
                    .map(|c| c.name.to_string())
                    .collect();
                eprintln!("chain {}: rejected by {}", chain.chain_id, failures.join(", "));
            }
            FilterDecision::Quarantine => {
                quarantined += 1;
                eprintln!("chain {}: quarantined (rubric backend unavailable)", chain.chain_id);
            }
        }
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;
    let write = |name: &str, body: String| -> Result<(), CliError> {
        let path = args.out.join(name);
        std::fs::write(&path, body)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    };
    write("nodes.jsonl", trace::to_jsonl(&graph.node_records()))?;
    write("edges.jsonl", trace::to_jsonl(&graph.edge_records()))?;
    let chain_records: Vec<serde_json::Value> = sample
        .chains
        .iter()
        .map(|chain| {
            serde_json::json!({
                "chain_id": chain.chain_id,
                "nodes": chain.nodes(),
                "edges": chain.edges,
            })
        })
        .collect();
    write("chains.jsonl", trace::to_jsonl(&chain_records))?;
    write("qa.jsonl", trace::to_jsonl(&accepted))?;

    eprintln!(
        "wrote {} chains, {} accepted qa items ({rejected} rejected, {quarantined} quarantined) to {}",
        sample.chains.len(),
        accepted.len(),
        args.out.display(),
    );
    Ok(())
}
