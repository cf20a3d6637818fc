//! Discrete-event comparison of pre-query streaming thinking against
//! post-query chain-of-thought.
//!
//! Generation is modeled at a constant token rate with an optional fixed
//! prefill latency per call. The streaming side runs the real orchestrator
//! over a synthetic stream; the post-query baseline is closed-form. When the
//! per-clip thought fits inside the frame inter-arrival gap, query latency
//! covers only the final answer and is independent of how many clips streamed
//! past.

use crate::backends::{finish_result, Backend, BackendError, GenerationRequest, GenerationResult};
use crate::orchestrator::{measure_latency, run_session, QaLatencyReport};
use crate::stream_model::{ClockMode, DeadlinePolicy, FrameRecord, QueryEvent, SessionConfig};
use crate::time::{DurationMs, TimeMs};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatencyError {
    #[error("profile field {field} must be positive")]
    NonPositive { field: &'static str },
    #[error("unknown profile key `{0}`")]
    UnknownKey(String),
    #[error("bad value for {key}: {value}")]
    BadValue { key: String, value: String },
    #[error("cannot compute speedup against zero latency")]
    ZeroLatency,
    #[error("simulation failed: {0}")]
    Simulation(String),
}

/// Token counts and rates describing one workload.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyProfile {
    pub frame_interarrival: DurationMs,
    pub clip_count: u32,
    pub thought_tokens: u32,
    pub answer_tokens: u32,
    pub cot_tokens: u32,
    /// Tokens per second.
    pub generation_rate: f64,
    /// Fixed prefill latency added to every generation call.
    pub prefill: DurationMs,
}

impl Default for LatencyProfile {
    /// Calibrated so the streaming answer takes 0.56 s and the post-query
    /// chain-of-thought baseline takes 8.80 s.
    fn default() -> Self {
        LatencyProfile {
            frame_interarrival: DurationMs(1000),
            clip_count: 8,
            thought_tokens: 80,
            answer_tokens: 56,
            cot_tokens: 824,
            generation_rate: 100.0,
            prefill: DurationMs(0),
        }
    }
}

impl LatencyProfile {
    pub fn validate(&self) -> Result<(), LatencyError> {
        let positives: [(&'static str, bool); 5] = [
            ("frame_interarrival_s", self.frame_interarrival.0 > 0),
            ("clip_count", self.clip_count > 0),
            ("thought_tokens", self.thought_tokens > 0),
            ("answer_tokens", self.answer_tokens > 0),
            ("generation_rate", self.generation_rate > 0.0),
        ];
        for (field, ok) in positives {
            if !ok {
                return Err(LatencyError::NonPositive { field });
            }
        }
        Ok(())
    }

    /// Parse the flat `key = value` profile file format (`#` comments).
    pub fn from_kv(text: &str) -> Result<Self, LatencyError> {
        let mut profile = LatencyProfile::default();
        for raw_line in text.lines() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LatencyError::BadValue {
                    key: line.to_string(),
                    value: "expected key = value".into(),
                })?;
            let key = key.trim();
            let value = value.trim();
            let bad = || LatencyError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "frame_interarrival_s" => {
                    let secs: f64 = value.parse().map_err(|_| bad())?;
                    profile.frame_interarrival = DurationMs::from_secs_f64(secs);
                }
                "clip_count" => profile.clip_count = value.parse().map_err(|_| bad())?,
                "thought_tokens" => profile.thought_tokens = value.parse().map_err(|_| bad())?,
                "answer_tokens" => profile.answer_tokens = value.parse().map_err(|_| bad())?,
                "cot_tokens" => profile.cot_tokens = value.parse().map_err(|_| bad())?,
                "generation_rate" => profile.generation_rate = value.parse().map_err(|_| bad())?,
                "prefill_ms" => profile.prefill = DurationMs(value.parse().map_err(|_| bad())?),
                other => return Err(LatencyError::UnknownKey(other.to_string())),
            }
        }
        profile.validate()?;
        Ok(profile)
    }

    pub fn generation_duration(&self, tokens: u32) -> DurationMs {
        DurationMs((f64::from(tokens) / self.generation_rate * 1000.0).round() as u64)
            + self.prefill
    }

    /// Tokens generated across a streaming session (thoughts plus answer).
    pub fn streaming_generated_tokens(&self) -> u64 {
        u64::from(self.clip_count) * u64::from(self.thought_tokens) + u64::from(self.answer_tokens)
    }

    /// Tokens generated by the post-query baseline.
    pub fn postquery_generated_tokens(&self) -> u64 {
        u64::from(self.cot_tokens) + u64::from(self.answer_tokens)
    }
}

/// Backend with fixed token counts per call kind and rate-derived durations.
#[derive(Debug, Clone)]
pub struct RateModeledBackend {
    profile: LatencyProfile,
    calls: u32,
}

impl RateModeledBackend {
    pub fn new(profile: LatencyProfile) -> Self {
        RateModeledBackend { profile, calls: 0 }
    }
}

impl Backend for RateModeledBackend {
    fn name(&self) -> &str {
        "rate-model"
    }

    fn generate(
        &mut self,
        request: &GenerationRequest,
        issued_at: TimeMs,
    ) -> Result<GenerationResult, BackendError> {
        self.calls += 1;
        let (tokens, text) = if request.is_answer_request() {
            (self.profile.answer_tokens, "\\boxed{ok}".to_string())
        } else {
            (self.profile.thought_tokens, format!("summary {}", self.calls))
        };
        let duration = self.profile.generation_duration(tokens);
        Ok(finish_result(request, issued_at, text, tokens, duration))
    }
}

const SIM_CLIP_TOKENS: u32 = 64;

/// Synthetic stream for a profile: one full clip per inter-arrival interval,
/// a trailing partial frame, and a query one interval after the last clip.
pub fn synthetic_stream(profile: &LatencyProfile) -> (Vec<FrameRecord>, QueryEvent) {
    let gap = profile.frame_interarrival.0;
    let mut frames = Vec::new();
    for i in 0..u64::from(profile.clip_count) {
        frames.push(FrameRecord {
            frame_index: i,
            timestamp: TimeMs((i + 1) * gap),
            visual_token_count: SIM_CLIP_TOKENS,
            caption: None,
        });
    }
    // Partial frame that flushes into the final answer context.
    frames.push(FrameRecord {
        frame_index: u64::from(profile.clip_count),
        timestamp: TimeMs(u64::from(profile.clip_count) * gap + gap / 2),
        visual_token_count: SIM_CLIP_TOKENS / 2,
        caption: None,
    });
    let query = QueryEvent {
        query_time: TimeMs((u64::from(profile.clip_count) + 1) * gap),
        question: "what happened so far?".into(),
        gold_answer: None,
    };
    (frames, query)
}

/// Run the orchestrator over the profile's synthetic stream and measure.
pub fn simulate_vst(profile: &LatencyProfile) -> Result<QaLatencyReport, LatencyError> {
    profile.validate()?;
    let config = SessionConfig {
        clip_capacity_l: SIM_CLIP_TOKENS,
        max_thinking_times: profile.clip_count,
        per_step_video_token_cap: 8192,
        memory_budget_entries: 64,
        memory_budget_chars: 64_000,
        mode: ClockMode::VirtualClock,
        deadline_policy: DeadlinePolicy::Block,
    };
    let (frames, query) = synthetic_stream(profile);
    let mut backend = RateModeledBackend::new(profile.clone());
    let run = run_session(&config, &frames, &[query], &mut backend)
        .map_err(|abort| LatencyError::Simulation(abort.to_string()))?;
    measure_latency(&run.transcript).map_err(|e| LatencyError::Simulation(e.to_string()))
}

/// Closed-form post-query baseline: think after the query, then answer.
pub fn simulate_postquery_cot(profile: &LatencyProfile) -> Result<QaLatencyReport, LatencyError> {
    profile.validate()?;
    let total_tokens = profile.cot_tokens + profile.answer_tokens;
    Ok(QaLatencyReport {
        qa_latency: profile.generation_duration(total_tokens),
        thinking_time_total: DurationMs::ZERO,
        thinking_time_overlapped: DurationMs::ZERO,
        deadline_misses: 0,
    })
}

/// How many times faster the streaming paradigm answers.
pub fn speedup_report(vst: &QaLatencyReport, cot: &QaLatencyReport) -> Result<f64, LatencyError> {
    if vst.qa_latency.0 == 0 {
        return Err(LatencyError::ZeroLatency);
    }
    Ok(cot.qa_latency.0 as f64 / vst.qa_latency.0 as f64)
}
