//! Core domain types shared by the runtime, simulator, and packers.
//!
//! Visual content is modeled as token counts plus optional captions; the
//! runtime never touches pixel data. All types are immutable values after
//! construction and safe to share across threads.

use crate::time::{DurationMs, TimeMs};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// One frame of the incoming stream: an index, an arrival timestamp, and the
/// number of visual tokens its encoded features occupy.
///
/// Wire form (frame trace, one JSON object per line):
/// `{"frame_index": 0, "timestamp_s": 0.5, "visual_tokens": 100, "caption": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    #[serde(rename = "timestamp_s", with = "crate::time::serde_secs")]
    pub timestamp: TimeMs,
    #[serde(rename = "visual_tokens")]
    pub visual_token_count: u32,
    /// Used only by the mock backend and replay fixtures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

/// A contiguous run of frames closed by the token-capacity rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    /// 1-based clip index within the session.
    pub clip_index: u32,
    /// Inclusive pair of member frame indices.
    pub frame_range: (u64, u64),
    pub start_time: TimeMs,
    pub end_time: TimeMs,
    pub total_visual_tokens: u64,
}

impl Clip {
    /// `Time {start}-{end}s`, one decimal. The shared prompt-side rendering.
    pub fn render_span(&self) -> String {
        format!(
            "Time {}-{}s",
            self.start_time.render_secs(),
            self.end_time.render_secs()
        )
    }
}

/// A streaming thought produced for one clip, held in long-term memory.
///
/// Snapshot wire form keeps exactly `clip_index`, `start_s`, `end_s`, `text`;
/// the generation duration is transcript metadata and is not persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtEntry {
    pub clip_index: u32,
    #[serde(rename = "start_s", with = "crate::time::serde_secs")]
    pub start_time: TimeMs,
    #[serde(rename = "end_s", with = "crate::time::serde_secs")]
    pub end_time: TimeMs,
    pub text: String,
    #[serde(skip, default)]
    pub generation_duration: DurationMs,
}

impl ThoughtEntry {
    pub fn new(clip_index: u32, start_time: TimeMs, end_time: TimeMs, text: String) -> Self {
        ThoughtEntry {
            clip_index,
            start_time,
            end_time,
            text,
            generation_duration: DurationMs::ZERO,
        }
    }
}

/// A user query injected into the stream at a point in time.
///
/// Wire form (query trace): `{"query_time_s": 4.0, "question": "...", "gold": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEvent {
    #[serde(rename = "query_time_s", with = "crate::time::serde_secs")]
    pub query_time: TimeMs,
    pub question: String,
    #[serde(default, rename = "gold", skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
}

/// The final response produced for a query, with timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxed_answer: Option<String>,
    pub answer_start_time: TimeMs,
    pub answer_end_time: TimeMs,
}

/// Whether the session clock advances by event timestamps or wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    VirtualClock,
    RealTime,
}

/// What to do when a clip closes while the previous thought is still generating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlinePolicy {
    /// Delay the clip's thought until the in-flight one completes and count a
    /// deadline miss.
    Block,
    /// Skip the clip's thought entirely.
    Drop,
    /// Queue the clip's thought to start at completion, without counting a miss.
    Defer,
}

impl fmt::Display for DeadlinePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeadlinePolicy::Block => "block",
            DeadlinePolicy::Drop => "drop",
            DeadlinePolicy::Defer => "defer",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("clip_capacity_L ({l}) must not exceed per_step_video_token_cap ({cap})")]
    ClipCapacityExceedsStepCap { l: u32, cap: u32 },
    #[error("{field} must be positive")]
    NonPositive { field: &'static str },
}

/// Session-wide limits and policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Visual-token capacity that closes a clip.
    pub clip_capacity_l: u32,
    /// Maximum number of streaming thoughts generated per session.
    pub max_thinking_times: u32,
    /// Visual tokens admitted into a single inference step.
    pub per_step_video_token_cap: u32,
    pub memory_budget_entries: usize,
    pub memory_budget_chars: usize,
    pub mode: ClockMode,
    pub deadline_policy: DeadlinePolicy,
}

impl SessionConfig {
    pub fn new(clip_capacity_l: u32, max_thinking_times: u32) -> Result<Self, ConfigError> {
        let config = SessionConfig {
            clip_capacity_l,
            max_thinking_times,
            ..SessionConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.clip_capacity_l == 0 {
            return Err(ConfigError::NonPositive {
                field: "clip_capacity_L",
            });
        }
        if self.max_thinking_times == 0 {
            return Err(ConfigError::NonPositive {
                field: "max_thinking_times",
            });
        }
        if self.per_step_video_token_cap == 0 {
            return Err(ConfigError::NonPositive {
                field: "per_step_video_token_cap",
            });
        }
        if self.memory_budget_entries == 0 {
            return Err(ConfigError::NonPositive {
                field: "memory.budget_entries",
            });
        }
        if self.memory_budget_chars == 0 {
            return Err(ConfigError::NonPositive {
                field: "memory.budget_chars",
            });
        }
        if self.clip_capacity_l > self.per_step_video_token_cap {
            return Err(ConfigError::ClipCapacityExceedsStepCap {
                l: self.clip_capacity_l,
                cap: self.per_step_video_token_cap,
            });
        }
        Ok(())
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            clip_capacity_l: 2048,
            max_thinking_times: 4,
            per_step_video_token_cap: 8192,
            memory_budget_entries: 16,
            memory_budget_chars: 8000,
            mode: ClockMode::VirtualClock,
            deadline_policy: DeadlinePolicy::Block,
        }
    }
}

/// One violated stream invariant, anchored to the offending frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamViolation {
    /// Position in the input sequence (not the frame_index field).
    pub position: usize,
    pub frame_index: u64,
    pub field: &'static str,
    pub message: String,
}

/// Outcome of [`validate_stream`]; empty iff the stream is well-formed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<StreamViolation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every frame invariant, reporting all violations rather than failing fast.
pub fn validate_stream(frames: &[FrameRecord]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (position, frame) in frames.iter().enumerate() {
        if frame.visual_token_count == 0 {
            report.violations.push(StreamViolation {
                position,
                frame_index: frame.frame_index,
                field: "visual_tokens",
                message: "visual_tokens must be at least 1".into(),
            });
        }
        if position > 0 {
            let prev = &frames[position - 1];
            if frame.frame_index <= prev.frame_index {
                report.violations.push(StreamViolation {
                    position,
                    frame_index: frame.frame_index,
                    field: "frame_index",
                    message: format!(
                        "frame_index {} does not increase past predecessor {}",
                        frame.frame_index, prev.frame_index
                    ),
                });
            }
            if frame.timestamp < prev.timestamp {
                report.violations.push(StreamViolation {
                    position,
                    frame_index: frame.frame_index,
                    field: "timestamp_s",
                    message: format!(
                        "timestamp {} precedes predecessor {}",
                        frame.timestamp, prev.timestamp
                    ),
                });
            }
        }
    }
    report
}
