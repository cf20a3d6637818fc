//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS] criterion: ...` line (visible with `--nocapture`).
//!
//! Run with: `cargo test -p vst-core --test acceptance -- --nocapture`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use vst_core::attention_mask::{
    build_mask_descriptor, build_streaming_mask, oracle_mask, visible_visual_window, TokenType,
    TokenTypeSequence,
};
use vst_core::backends::MockSummarizer;
use vst_core::kg;
use vst_core::latency_sim::{simulate_postquery_cot, simulate_vst, speedup_report, LatencyProfile};
use vst_core::memory::MemoryState;
use vst_core::orchestrator::{run_session, TranscriptEvent};
use vst_core::rl_objective::{clipped_term, group_advantages, kl_penalty, objective, RolloutGroup, Trajectory};
use vst_core::segmenter::segment_all;
use vst_core::sft_packer::{
    build_sequence, loss_mask, render_segment, segment_sequence, SftElement, TokenEstimator,
};
use vst_core::stream_model::{FrameRecord, QueryEvent, SessionConfig, ThoughtEntry};
use vst_core::time::TimeMs;

fn random_types(rng: &mut ChaCha8Rng, n: usize) -> TokenTypeSequence {
    let types = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                TokenType::Visual
            } else {
                TokenType::Text
            }
        })
        .collect();
    TokenTypeSequence::new(types).unwrap()
}

#[test]
fn mask_oracle_equivalence_1000_cases() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    for case in 0..1000 {
        let n = rng.gen_range(1..=64);
        let l = rng.gen_range(1..=8);
        let seq = random_types(&mut rng, n);
        let fast = build_streaming_mask(&seq, l).unwrap();
        let oracle = oracle_mask(&seq, l).unwrap();
        assert_eq!(fast, oracle, "case {case}: n={n} L={l}");
        let descriptor = build_mask_descriptor(&seq, l).unwrap();
        assert_eq!(descriptor.to_dense(&seq), fast, "descriptor view disagrees");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "sweep took {elapsed:?}");
    println!("[PASS] mask oracle equivalence: 1000 random cases (n<=64, L in 1..8) in {elapsed:?}");
}

#[test]
fn mask_structural_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=64);
        let l: u32 = rng.gen_range(1..=8);
        let seq = random_types(&mut rng, n);
        let mask = build_streaming_mask(&seq, l).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                assert!(!mask.allows(i, j), "causality violated at ({i},{j})");
            }
            for j in 0..=i {
                if !seq.is_visual(j) {
                    assert!(mask.allows(i, j), "text column {j} hidden from row {i}");
                }
            }
            let window = visible_visual_window(&mask, &seq, i).unwrap();
            assert!(window.len() <= l as usize, "window exceeds L at row {i}");
            let visual: Vec<usize> = (0..=i).filter(|&j| seq.is_visual(j)).collect();
            let expected: Vec<usize> =
                visual.iter().rev().take(window.len()).rev().copied().collect();
            assert_eq!(window, expected, "window is not the most recent visual suffix");
        }
        for j in 0..n {
            if !seq.is_visual(j) {
                continue;
            }
            let mut evicted = false;
            for i in j..n {
                if !mask.allows(i, j) {
                    evicted = true;
                } else {
                    assert!(!evicted, "visual column {j} reappeared at row {i}");
                }
            }
        }
    }
    println!("[PASS] mask structural suite: causality, text ubiquity, <=L window, monotone eviction");
}

#[test]
fn segmenter_500_random_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E6);
    for case in 0..500 {
        let l: u32 = rng.gen_range(1..=300);
        let frame_count = rng.gen_range(1..=80);
        let frames: Vec<FrameRecord> = (0..frame_count)
            .map(|i| FrameRecord {
                frame_index: i,
                timestamp: TimeMs(i * 500),
                visual_token_count: rng.gen_range(1..=200),
                caption: None,
            })
            .collect();
        let clips = segment_all(&frames, l).unwrap();

        let mut covered = Vec::new();
        for (pos, clip) in clips.iter().enumerate() {
            let members: Vec<&FrameRecord> = frames
                .iter()
                .filter(|f| {
                    f.frame_index >= clip.frame_range.0 && f.frame_index <= clip.frame_range.1
                })
                .collect();
            let total: u64 = members.iter().map(|f| u64::from(f.visual_token_count)).sum();
            assert_eq!(clip.total_visual_tokens, total, "case {case}: clip total mismatch");
            if pos + 1 < clips.len() {
                let max_member =
                    members.iter().map(|f| u64::from(f.visual_token_count)).max().unwrap();
                assert!(
                    clip.total_visual_tokens >= u64::from(l)
                        && clip.total_visual_tokens < u64::from(l) + max_member,
                    "case {case}: clip {} outside [L, L + max frame)",
                    clip.clip_index
                );
            }
            covered.extend(clip.frame_range.0..=clip.frame_range.1);
        }
        let expected: Vec<u64> = (0..frame_count).collect();
        assert_eq!(covered, expected, "case {case}: clips do not reproduce the stream");
    }
    println!("[PASS] segmenter: 500 random streams, capacity band and lossless reconstruction");
}

#[test]
fn memory_fifo_replay_500_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1F0);
    for case in 0..500 {
        let budget_entries = rng.gen_range(1..=8);
        let budget_chars = rng.gen_range(30..=500);
        let total = rng.gen_range(1..=30);
        let all: Vec<ThoughtEntry> = (0..total)
            .map(|i| {
                let len = rng.gen_range(0..=40);
                let text: String = (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
                ThoughtEntry::new(i + 1, TimeMs(u64::from(i) * 1000), TimeMs(u64::from(i + 1) * 1000), text)
            })
            .collect();

        let mut memory = MemoryState::new(budget_entries, budget_chars);
        let mut cursor = 0;
        while cursor < all.len() {
            let chunk = rng.gen_range(1..=4).min(all.len() - cursor);
            memory = memory.update(&all[cursor..cursor + chunk]).unwrap();
            assert!(memory.entries().len() <= budget_entries, "case {case}: entry budget");
            assert!(memory.rendered_chars() <= budget_chars, "case {case}: char budget");
            cursor += chunk;
        }

        // Replay oracle: maximal suffix of all appended thoughts fitting both budgets.
        let mut expected: &[ThoughtEntry] = &all;
        loop {
            let fits_entries = expected.len() <= budget_entries;
            let fits_chars = MemoryState::new(usize::MAX >> 1, usize::MAX >> 1)
                .update(expected)
                .unwrap()
                .rendered_chars()
                <= budget_chars;
            if fits_entries && fits_chars {
                break;
            }
            expected = &expected[1..];
        }
        assert_eq!(memory.entries(), expected, "case {case}: FIFO replay oracle mismatch");
    }
    println!("[PASS] memory: FIFO replay oracle equivalence on 500 random update sequences");
}

struct UnitEstimator;
impl TokenEstimator for UnitEstimator {
    fn estimate(&self, text: &str) -> u64 {
        text.split_whitespace().count() as u64
    }
}

#[test]
fn sft_packing_200_random_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5F7);
    let words = ["scene", "shifts", "door", "opens", "light", "fades", "steam", "rises"];
    for case in 0..200 {
        let pair_count = rng.gen_range(0..=10);
        let clips: Vec<vst_core::stream_model::Clip> = (0..=pair_count)
            .map(|i| vst_core::stream_model::Clip {
                clip_index: i + 1,
                frame_range: (u64::from(i), u64::from(i)),
                start_time: TimeMs(u64::from(i) * 1000),
                end_time: TimeMs(u64::from(i + 1) * 1000),
                total_visual_tokens: rng.gen_range(1..=40),
            })
            .collect();
        let thoughts: Vec<ThoughtEntry> = (0..pair_count)
            .map(|i| {
                let len = rng.gen_range(1..=6);
                let text = (0..len)
                    .map(|_| words[rng.gen_range(0..words.len())])
                    .collect::<Vec<_>>()
                    .join(" ");
                ThoughtEntry::new(i + 1, TimeMs(u64::from(i) * 1000), TimeMs(u64::from(i + 1) * 1000), text)
            })
            .collect();
        let query = QueryEvent {
            query_time: TimeMs(u64::from(pair_count + 1) * 1000),
            question: "what changed here".into(),
            gold_answer: None,
        };
        let sequence = build_sequence(
            &clips,
            &thoughts,
            query,
            "the light faded".into(),
            MemoryState::new(16, 8000),
        )
        .unwrap();
        let cap = rng.gen_range(120..=260);
        let estimator = UnitEstimator;
        let segments = segment_sequence(&sequence, cap, &estimator).unwrap();

        // Reconstruction.
        let original: Vec<u32> = sequence.pairs().iter().map(|(c, _)| c.clip_index).collect();
        let rebuilt: Vec<u32> = segments
            .iter()
            .flat_map(|s| {
                s.elements.iter().filter_map(|e| match e {
                    SftElement::ClipTokens(c) => Some(c.clip_index),
                    _ => None,
                })
            })
            .collect();
        assert_eq!(original, rebuilt, "case {case}: pair reconstruction");

        // Memory recursion against a direct fold through the memory module.
        let all_thoughts: Vec<ThoughtEntry> =
            sequence.pairs().iter().map(|(_, z)| (*z).clone()).collect();
        for segment in &segments {
            let first_pair = segment.elements.iter().find_map(|e| match e {
                SftElement::ClipTokens(c) => Some(c.clip_index),
                _ => None,
            });
            let preceding: Vec<ThoughtEntry> = match first_pair {
                Some(first) => all_thoughts.iter().filter(|z| z.clip_index < first).cloned().collect(),
                None => all_thoughts.clone(),
            };
            let expected = sequence.initial_memory().update(&preceding).unwrap();
            assert_eq!(
                segment.carried_memory, expected,
                "case {case}: segment {} carried memory",
                segment.segment_index
            );
        }

        // Loss-mask conservation.
        let supervised: usize = segments
            .iter()
            .map(|s| loss_mask(&render_segment(s, &estimator)).unwrap().supervised_count())
            .sum();
        let expected_supervised: u64 = all_thoughts
            .iter()
            .map(|z| estimator.estimate(&z.text))
            .sum::<u64>()
            + estimator.estimate(sequence.answer());
        assert_eq!(supervised as u64, expected_supervised, "case {case}: loss-mask conservation");
    }
    println!("[PASS] sft packing: reconstruction, memory recursion, loss-mask conservation on 200 sequences");
}

#[test]
fn rl_math_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x61);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=16);
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let advantages = group_advantages(&rewards).unwrap();
        let sum: f64 = advantages.iter().sum();
        assert!(sum.abs() < 1e-9, "advantages sum {sum} exceeds 1e-9");
    }

    for _ in 0..1000 {
        let ratio = rng.gen_range(0.01..4.0);
        let advantage = rng.gen_range(-3.0..3.0);
        let eps_low = rng.gen_range(0.0..0.9);
        let eps_high = rng.gen_range(0.0..0.9);
        let term = clipped_term(ratio, advantage, eps_low, eps_high).unwrap();
        assert!(term <= ratio * advantage + 1e-12, "min property violated");
        if ratio >= 1.0 - eps_low && ratio <= 1.0 + eps_high {
            assert!((term - ratio * advantage).abs() < 1e-12, "equality inside the clip band");
        }
    }

    // Identical-policy, zero-advantage groups score exactly zero.
    let group = RolloutGroup::new(vec![
        Trajectory {
            reward: 0.5,
            ratios: vec![1.0; 9],
            logp_current: vec![-1.1; 9],
            logp_reference: vec![-1.1; 9],
        },
        Trajectory {
            reward: 0.5,
            ratios: vec![1.0; 5],
            logp_current: vec![-0.4; 5],
            logp_reference: vec![-0.4; 5],
        },
    ]);
    assert_eq!(objective(&group).unwrap(), 0.0);

    for _ in 0..1000 {
        let cur = rng.gen_range(-6.0..0.0);
        let reference = rng.gen_range(-6.0..0.0);
        let kl = kl_penalty(cur, reference).unwrap();
        assert!(kl >= 0.0);
        if (cur - reference).abs() < 1e-15 {
            assert_eq!(kl, 0.0);
        } else {
            assert!(kl > 0.0, "kl zero for distinct log-probs");
        }
    }
    assert_eq!(kl_penalty(-2.5, -2.5).unwrap(), 0.0);
    println!("[PASS] rl math: zero-sum advantages (1000 groups), clip bound, zero objective, kl >= 0");
}

#[test]
fn latency_amortization_matches_reported_speedup() {
    let started = Instant::now();
    // Calibration: 56 answer tokens and 824 CoT tokens at 100 tok/s give
    // 0.56 s and 8.80 s.
    let profile = LatencyProfile::default();
    let vst = simulate_vst(&profile).unwrap();
    let cot = simulate_postquery_cot(&profile).unwrap();
    assert_eq!(vst.qa_latency.0, 560, "answer latency calibrated to 0.56 s");
    assert_eq!(cot.qa_latency.0, 8800, "post-query CoT calibrated to 8.80 s");
    let speedup = speedup_report(&vst, &cot).unwrap();
    assert!(
        (speedup - 15.71).abs() <= 0.1,
        "speedup {speedup} not within 15.71 +/- 0.1"
    );

    let latencies: Vec<u64> = [1u32, 2, 4, 8, 16, 32]
        .iter()
        .map(|&clip_count| {
            let profile = LatencyProfile { clip_count, ..LatencyProfile::default() };
            let report = simulate_vst(&profile).unwrap();
            assert_eq!(report.deadline_misses, 0);
            report.qa_latency.0
        })
        .collect();
    assert!(
        latencies.iter().all(|&ms| ms == latencies[0]),
        "qa latency varies with clip count: {latencies:?}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "virtual-clock sweep took {elapsed:?}");
    println!(
        "[PASS] latency amortization: speedup {speedup:.2} (target 15.71 +/- 0.1), \
         qa latency bit-identical over clip_count {{1,2,4,8,16,32}}, runtime {elapsed:?}"
    );
}

fn golden_frames() -> Vec<FrameRecord> {
    (0..12)
        .map(|i| FrameRecord {
            frame_index: i,
            timestamp: TimeMs((i + 1) * 750),
            visual_token_count: 60,
            caption: Some(format!("beat {i} unfolds")),
        })
        .collect()
}

#[test]
fn orchestrator_determinism_and_thought_cap() {
    let query = QueryEvent {
        query_time: TimeMs(10_500),
        question: "what unfolded?".into(),
        gold_answer: None,
    };
    let run_once = || {
        let mut backend = MockSummarizer::new(400.0);
        let config = SessionConfig {
            clip_capacity_l: 120,
            max_thinking_times: 4,
            ..SessionConfig::default()
        };
        run_session(&config, &golden_frames(), std::slice::from_ref(&query), &mut backend)
            .unwrap()
            .transcript
            .to_jsonl()
    };
    let first = run_once();
    let second = run_once();
    assert_eq!(first, second, "transcripts differ between identical runs");
    assert!(!first.is_empty());

    // Thought count equals min(closed pre-query clips, cap) across the grid.
    for cap in [1u32, 4, 16] {
        for frame_count in [2u64, 6, 12] {
            let frames: Vec<FrameRecord> = golden_frames().into_iter().take(frame_count as usize).collect();
            let closed_clips = frame_count / 2; // 60-token frames against L=120
            let mut backend = MockSummarizer::new(400.0);
            let config = SessionConfig {
                clip_capacity_l: 120,
                max_thinking_times: cap,
                ..SessionConfig::default()
            };
            let run = run_session(&config, &frames, std::slice::from_ref(&query), &mut backend).unwrap();
            let thoughts = run
                .transcript
                .events
                .iter()
                .filter(|e| matches!(e, TranscriptEvent::ThoughtStarted { .. }))
                .count() as u64;
            assert_eq!(
                thoughts,
                closed_clips.min(u64::from(cap)),
                "cap {cap}, {frame_count} frames"
            );
        }
    }
    println!("[PASS] orchestrator: byte-identical golden transcript; thought count = min(clips, cap) for cap in {{1,4,16}}");
}

fn synthetic_scene_trace() -> (Vec<kg::SceneClip>, Vec<Vec<kg::EntityTriple>>) {
    // 100 clips laying down one long directed path: ent_000 -> ent_001 -> ...
    // Three edges per clip, 301 entities total.
    let mut scenes = Vec::new();
    let mut extractions = Vec::new();
    for t in 0u64..100 {
        let clip = kg::SceneClip {
            clip_id: t as u32 + 1,
            start_time: TimeMs(t * 2000),
            end_time: TimeMs((t + 1) * 2000),
            description: format!("segment {t}"),
        };
        let base = t * 3;
        let triples: Vec<kg::EntityTriple> = (0..3)
            .map(|k| kg::EntityTriple {
                head: format!("ent_{:03}", base + k),
                relation: "leads_to".into(),
                tail: format!("ent_{:03}", base + k + 1),
                start_time: clip.start_time,
                end_time: clip.end_time,
                description: format!("ent_{:03} leads to ent_{:03}", base + k, base + k + 1),
            })
            .collect();
        scenes.push(clip);
        extractions.push(triples);
    }
    (scenes, extractions)
}

#[test]
fn kg_pipeline_window_chains_and_rubric() {
    let (scenes, extractions) = synthetic_scene_trace();
    let w = 5usize;
    let mut bank = kg::EntityBank::new();
    for (scene, extraction) in scenes.iter().zip(extractions.iter()) {
        bank = bank.update(scene, extraction, w).unwrap();
        let ids: Vec<u32> = bank.window().collect();
        let t = scene.clip_id;
        let expected: Vec<u32> = (t.saturating_sub(w as u32 - 1).max(1)..=t).collect();
        assert_eq!(ids, expected, "window invariant broken at clip {t}");
    }

    let graph = kg::KnowledgeGraph::from_bank(&bank);
    assert_eq!(graph.node_count(), 301);
    assert_eq!(graph.edge_count(), 300);

    let seed = 20260807u64;
    let sample = kg::sample_chains(&graph, 20, 3, 8, 0.10, seed).unwrap();
    assert_eq!(
        sample.chains.len(),
        20,
        "requested 20 chains, got {} ({:?})",
        sample.chains.len(),
        sample.diagnostics
    );
    for chain in &sample.chains {
        assert!(chain.is_simple_path(), "chain {} is not a simple path", chain.chain_id);
        assert!(chain.hops() >= 3 && chain.hops() <= 8);
    }
    // Post-hoc re-verification of the pairwise overlap bound.
    for i in 0..sample.chains.len() {
        for j in (i + 1)..sample.chains.len() {
            let overlap = kg::chain_overlap(&sample.chains[i], &sample.chains[j]).unwrap();
            assert!(
                overlap < 0.10,
                "chains {i} and {j} overlap {overlap:.3} >= 10%"
            );
        }
    }
    // Bit-for-bit reproducibility under the fixed seed.
    let again = kg::sample_chains(&graph, 20, 3, 8, 0.10, seed).unwrap();
    assert_eq!(sample.chains, again.chains, "fixed seed did not reproduce chains");

    // Rubric: clean item accepted, planted violations rejected.
    let mut analyst = kg::MockAnalyst::new();
    let clean = kg::synthesize_qa(&sample.chains[0], &graph, &mut analyst).unwrap();
    let outcome = kg::filter_qa(&clean, &mut analyst);
    assert_eq!(outcome.decision, kg::FilterDecision::Accept);

    let mut banned = clean.clone();
    banned.question = format!("{} As seen in Step 2.", banned.question);
    let outcome = kg::filter_qa(&banned, &mut analyst);
    assert_eq!(outcome.decision, kg::FilterDecision::Reject, "banned token not rejected");

    let mut repeated = clean.clone();
    repeated.streaming_cot.push(repeated.streaming_cot[0].clone());
    let outcome = kg::filter_qa(&repeated, &mut analyst);
    assert_eq!(outcome.decision, kg::FilterDecision::Reject, "repeated sentence not rejected");

    println!(
        "[PASS] kg pipeline: window invariant over 100 clips, 20 simple-path chains with \
         pairwise overlap < 10% (re-verified), seed-reproducible, rubric rejects planted violations"
    );
}

mod stub_server {
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Accept one HTTP request, reply with `response_body`, and hand back the
    /// raw request (head + body).
    pub fn spawn_once(response_body: String) -> (String, mpsc::Receiver<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().expect("accept");
            let mut buffer = Vec::new();
            let mut chunk = [0u8; 4096];
            let (head, mut body) = loop {
                let n = stream.read(&mut chunk).expect("read");
                buffer.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buffer) {
                    let head = String::from_utf8_lossy(&buffer[..pos]).to_string();
                    let body = buffer[pos + 4..].to_vec();
                    break (head, body);
                }
            };
            let content_length = head
                .lines()
                .find_map(|line| {
                    let (name, value) = line.split_once(':')?;
                    name.eq_ignore_ascii_case("content-length")
                        .then(|| value.trim().parse::<usize>().ok())?
                })
                .unwrap_or(0);
            while body.len() < content_length {
                let n = stream.read(&mut chunk).expect("read body");
                body.extend_from_slice(&chunk[..n]);
            }
            let body = String::from_utf8_lossy(&body).to_string();
            let response = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                response_body.len(),
                response_body
            );
            stream.write_all(response.as_bytes()).expect("write");
            tx.send((head, body)).ok();
        });
        (format!("http://{addr}"), rx)
    }

    fn find_header_end(buffer: &[u8]) -> Option<usize> {
        buffer.windows(4).position(|w| w == b"\r\n\r\n")
    }
}

#[test]
fn http_backend_wire_conformance() {
    use vst_core::backends::{Backend, HttpChatBackend};

    let stub_reply = r#"{"choices":[{"message":{"role":"assistant","content":"stub says hi"}}],"usage":{"completion_tokens":3}}"#;
    let (url, rx) = stub_server::spawn_once(stub_reply.to_string());

    let mut backend = HttpChatBackend::new(&url, "vst-7b");
    let memory = MemoryState::new(4, 1000);
    let clip = vst_core::stream_model::Clip {
        clip_index: 1,
        frame_range: (0, 0),
        start_time: TimeMs(0),
        end_time: TimeMs(1000),
        total_visual_tokens: 10,
    };
    let request = vst_core::backends::render_thought_prompt(&memory, &clip, &[]);
    let result = backend.generate(&request, TimeMs(0)).unwrap();
    assert_eq!(result.text, "stub says hi");
    assert_eq!(result.token_count, 3);

    let (head, body) = rx.recv().expect("stub captured request");
    let request_line = head.lines().next().unwrap();
    assert_eq!(request_line, "POST /v1/chat/completions HTTP/1.1");

    // The body must match the documented wire format byte-for-byte on keys.
    let expected_body = format!(
        r#"{{"model":"vst-7b","messages":[{{"role":"system","content":{}}},{{"role":"user","content":{}}}],"max_tokens":512}}"#,
        serde_json::to_string(&request.role_messages[0].content).unwrap(),
        serde_json::to_string(&request.role_messages[1].content).unwrap(),
    );
    assert_eq!(body, expected_body);
    println!("[PASS] http backend: request/response round-trip matches the wire format byte-for-byte");
}
