//! Event-driven session loop: think on each closed clip before the query,
//! answer directly when the query arrives.
//!
//! The session is a state machine driven by `step`; all mutation is serialized
//! through it, and under the virtual clock a session is a pure function of its
//! inputs. [`run_session`] owns the discrete-event loop: frame and query
//! events are scheduled up front, generation completions are scheduled as they
//! are issued, and real-time mode merely sleeps until each event's wall
//! offset before processing it.
//!
//! At most one generation is in flight per session. When a clip closes while
//! a thought is still generating, the configured [`DeadlinePolicy`] decides
//! whether the new clip's thought is delayed (counting a deadline miss),
//! silently deferred, or dropped.

use crate::backends::{
    extract_boxed, render_answer_prompt, render_thought_prompt, Backend, BackendError,
    GenerationRequest, GenerationResult,
};
use crate::memory::{MemoryError, MemoryState};
use crate::segmenter::{Segmenter, SegmenterError};
use crate::stream_model::{
    AnswerRecord, Clip, ClockMode, DeadlinePolicy, FrameRecord, QueryEvent, SessionConfig,
    ThoughtEntry,
};
use crate::time::{DurationMs, TimeMs};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("event at {event} precedes session clock {clock}")]
    EventInPast { event: TimeMs, clock: TimeMs },
    #[error("query arrived while a previous query is still being answered")]
    OverlappingQuery,
    #[error("generation completion with nothing in flight")]
    UnexpectedCompletion,
    #[error(transparent)]
    Segmenter(#[from] SegmenterError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("invalid config: {0}")]
    Config(#[from] crate::stream_model::ConfigError),
}

#[derive(Debug, Error)]
pub enum SessionAbort {
    #[error("backend failed: {error}")]
    Backend {
        error: BackendError,
        transcript: SessionTranscript,
        answers: Vec<AnswerRecord>,
    },
    #[error("protocol violation: {error}")]
    Protocol {
        error: SessionError,
        transcript: SessionTranscript,
        answers: Vec<AnswerRecord>,
    },
}

impl SessionAbort {
    pub fn transcript(&self) -> &SessionTranscript {
        match self {
            SessionAbort::Backend { transcript, .. } => transcript,
            SessionAbort::Protocol { transcript, .. } => transcript,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// The max-thinking-times cap is exhausted.
    Cap,
    /// The deadline policy dropped the thought.
    Deadline,
    /// A query is being answered; streaming thinking is paused.
    QueryPending,
}

/// Append-only session event log. Times serialize as integer milliseconds so
/// transcripts are byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    ClipClosed {
        at_ms: u64,
        clip_index: u32,
        frame_start: u64,
        frame_end: u64,
        visual_tokens: u64,
        flushed: bool,
    },
    ThoughtStarted {
        at_ms: u64,
        clip_index: u32,
        step_visual_tokens: u64,
        deadline_missed: bool,
    },
    ThoughtCompleted {
        at_ms: u64,
        clip_index: u32,
        duration_ms: u64,
        text: String,
    },
    ThoughtSkipped {
        at_ms: u64,
        clip_index: u32,
        reason: SkipReason,
    },
    QueryArrived {
        at_ms: u64,
        question: String,
    },
    AnswerStarted {
        at_ms: u64,
        step_visual_tokens: u64,
    },
    AnswerCompleted {
        at_ms: u64,
        duration_ms: u64,
        text: String,
        boxed: Option<String>,
    },
}

impl TranscriptEvent {
    pub fn at_ms(&self) -> u64 {
        match self {
            TranscriptEvent::ClipClosed { at_ms, .. }
            | TranscriptEvent::ThoughtStarted { at_ms, .. }
            | TranscriptEvent::ThoughtCompleted { at_ms, .. }
            | TranscriptEvent::ThoughtSkipped { at_ms, .. }
            | TranscriptEvent::QueryArrived { at_ms, .. }
            | TranscriptEvent::AnswerStarted { at_ms, .. }
            | TranscriptEvent::AnswerCompleted { at_ms, .. } => *at_ms,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionTranscript {
    pub events: Vec<TranscriptEvent>,
}

impl SessionTranscript {
    pub fn to_jsonl(&self) -> String {
        crate::trace::to_jsonl(&self.events)
    }

    /// Structural sanity: timestamps non-decreasing, every completion pairs
    /// with a start, the query precedes the answer.
    pub fn validate(&self) -> Result<(), String> {
        let mut last = 0u64;
        for event in &self.events {
            if event.at_ms() < last {
                return Err(format!("timestamps decrease at {event:?}"));
            }
            last = event.at_ms();
        }
        let mut open_thoughts: Vec<u32> = Vec::new();
        let mut query_open = false;
        let mut answer_open = false;
        for event in &self.events {
            match event {
                TranscriptEvent::ThoughtStarted { clip_index, .. } => {
                    open_thoughts.push(*clip_index)
                }
                TranscriptEvent::ThoughtCompleted { clip_index, .. } => {
                    match open_thoughts.pop() {
                        Some(open) if open == *clip_index => {}
                        other => {
                            return Err(format!(
                                "thought completion for clip {clip_index} pairs with {other:?}"
                            ))
                        }
                    }
                }
                TranscriptEvent::QueryArrived { .. } => query_open = true,
                TranscriptEvent::AnswerStarted { .. } => {
                    if !query_open {
                        return Err("answer started before any query".into());
                    }
                    answer_open = true;
                }
                TranscriptEvent::AnswerCompleted { .. } => {
                    if !answer_open {
                        return Err("answer completed without a start".into());
                    }
                    answer_open = false;
                    query_open = false;
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Latency accounting for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaLatencyReport {
    /// Query submission to answer completion.
    pub qa_latency: DurationMs,
    /// Total time spent generating streaming thoughts.
    pub thinking_time_total: DurationMs,
    /// Thinking time hidden inside stream gaps (before the next clip closes
    /// or the query arrives).
    pub thinking_time_overlapped: DurationMs,
    pub deadline_misses: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("transcript has no query/answer pair")]
    IncompleteTranscript,
}

#[derive(Debug, Clone)]
enum GenerationKind {
    Thought { clip: Clip },
    Answer,
}

#[derive(Debug, Clone)]
struct InFlight {
    kind: GenerationKind,
}

#[derive(Debug, Clone)]
struct PendingThought {
    clip: Clip,
    captions: Vec<String>,
    counts_as_miss: bool,
}

/// Events fed to [`Session::step`].
#[derive(Debug, Clone)]
pub enum SessionEvent {
    FrameArrived(FrameRecord),
    GenerationCompleted(GenerationResult),
    QueryArrived(QueryEvent),
    Tick(TimeMs),
}

/// Work the driver must perform after a step.
#[derive(Debug, Clone)]
pub enum SessionAction {
    IssueGeneration { request: GenerationRequest },
    AnswerReady(AnswerRecord),
}

/// All mutable session state; see module docs for the stepping contract.
pub struct Session {
    config: SessionConfig,
    segmenter: Segmenter,
    memory: MemoryState,
    caption_buffer: Vec<String>,
    thoughts_emitted: u32,
    clock: TimeMs,
    in_flight: Option<InFlight>,
    pending_thoughts: VecDeque<PendingThought>,
    pending_query: Option<(QueryEvent, Option<Clip>, Vec<String>)>,
    query_outstanding: bool,
    last_closed: Option<(Clip, Vec<String>)>,
    transcript: SessionTranscript,
    answers: Vec<AnswerRecord>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let memory = MemoryState::new(config.memory_budget_entries, config.memory_budget_chars);
        Ok(Session {
            config,
            segmenter: Segmenter::new(),
            memory,
            caption_buffer: Vec::new(),
            thoughts_emitted: 0,
            clock: TimeMs::ZERO,
            in_flight: None,
            pending_thoughts: VecDeque::new(),
            pending_query: None,
            query_outstanding: false,
            last_closed: None,
            transcript: SessionTranscript::default(),
            answers: Vec::new(),
        })
    }

    pub fn clock(&self) -> TimeMs {
        self.clock
    }

    pub fn memory(&self) -> &MemoryState {
        &self.memory
    }

    pub fn transcript(&self) -> &SessionTranscript {
        &self.transcript
    }

    pub fn answers(&self) -> &[AnswerRecord] {
        &self.answers
    }

    pub fn into_run(self) -> SessionRun {
        SessionRun {
            transcript: self.transcript,
            answers: self.answers,
        }
    }

    fn advance_clock(&mut self, to: TimeMs) -> Result<(), SessionError> {
        if to < self.clock {
            return Err(SessionError::EventInPast {
                event: to,
                clock: self.clock,
            });
        }
        self.clock = to;
        Ok(())
    }

    fn log(&mut self, event: TranscriptEvent) {
        self.transcript.events.push(event);
    }

    fn step_tokens(&self, clip: &Clip) -> u64 {
        clip.total_visual_tokens
            .min(u64::from(self.config.per_step_video_token_cap))
    }

    /// Process one event; returns the driver work it triggers.
    pub fn step(&mut self, event: SessionEvent) -> Result<Vec<SessionAction>, SessionError> {
        match event {
            SessionEvent::FrameArrived(frame) => self.on_frame(frame),
            SessionEvent::GenerationCompleted(result) => self.on_completion(result),
            SessionEvent::QueryArrived(query) => self.on_query(query),
            SessionEvent::Tick(at) => {
                self.advance_clock(at)?;
                Ok(Vec::new())
            }
        }
    }

    fn on_frame(&mut self, frame: FrameRecord) -> Result<Vec<SessionAction>, SessionError> {
        self.advance_clock(frame.timestamp)?;
        if let Some(caption) = &frame.caption {
            self.caption_buffer.push(caption.clone());
        }
        let closed = self
            .segmenter
            .ingest_frame(frame, self.config.clip_capacity_l)?;
        match closed {
            Some(clip) => {
                let captions = std::mem::take(&mut self.caption_buffer);
                self.log(TranscriptEvent::ClipClosed {
                    at_ms: self.clock.0,
                    clip_index: clip.clip_index,
                    frame_start: clip.frame_range.0,
                    frame_end: clip.frame_range.1,
                    visual_tokens: clip.total_visual_tokens,
                    flushed: false,
                });
                Ok(self.handle_closed_clip(clip, captions))
            }
            None => Ok(Vec::new()),
        }
    }

    fn handle_closed_clip(&mut self, clip: Clip, captions: Vec<String>) -> Vec<SessionAction> {
        let mut actions = Vec::new();
        if self.query_outstanding {
            self.log(TranscriptEvent::ThoughtSkipped {
                at_ms: self.clock.0,
                clip_index: clip.clip_index,
                reason: SkipReason::QueryPending,
            });
        } else if self.thoughts_emitted >= self.config.max_thinking_times {
            self.log(TranscriptEvent::ThoughtSkipped {
                at_ms: self.clock.0,
                clip_index: clip.clip_index,
                reason: SkipReason::Cap,
            });
        } else if self.in_flight.is_some() {
            match self.config.deadline_policy {
                DeadlinePolicy::Drop => self.log(TranscriptEvent::ThoughtSkipped {
                    at_ms: self.clock.0,
                    clip_index: clip.clip_index,
                    reason: SkipReason::Deadline,
                }),
                DeadlinePolicy::Block | DeadlinePolicy::Defer => {
                    self.pending_thoughts.push_back(PendingThought {
                        clip: clip.clone(),
                        captions: captions.clone(),
                        counts_as_miss: self.config.deadline_policy == DeadlinePolicy::Block,
                    });
                }
            }
        } else {
            actions.push(self.issue_thought(clip.clone(), &captions, false));
        }
        self.last_closed = Some((clip, captions));
        actions
    }

    fn issue_thought(
        &mut self,
        clip: Clip,
        captions: &[String],
        deadline_missed: bool,
    ) -> SessionAction {
        let request = render_thought_prompt(&self.memory, &clip, captions);
        self.thoughts_emitted += 1;
        self.log(TranscriptEvent::ThoughtStarted {
            at_ms: self.clock.0,
            clip_index: clip.clip_index,
            step_visual_tokens: self.step_tokens(&clip),
            deadline_missed,
        });
        self.in_flight = Some(InFlight {
            kind: GenerationKind::Thought { clip },
        });
        SessionAction::IssueGeneration { request }
    }

    fn issue_answer(
        &mut self,
        query: QueryEvent,
        clip: Option<Clip>,
        captions: &[String],
    ) -> SessionAction {
        let request = render_answer_prompt(&self.memory, clip.as_ref(), captions, &query);
        self.log(TranscriptEvent::AnswerStarted {
            at_ms: self.clock.0,
            step_visual_tokens: clip.as_ref().map_or(0, |c| self.step_tokens(c)),
        });
        self.in_flight = Some(InFlight {
            kind: GenerationKind::Answer,
        });
        SessionAction::IssueGeneration { request }
    }

    fn on_query(&mut self, query: QueryEvent) -> Result<Vec<SessionAction>, SessionError> {
        self.advance_clock(query.query_time)?;
        if self.query_outstanding {
            return Err(SessionError::OverlappingQuery);
        }
        self.query_outstanding = true;
        self.log(TranscriptEvent::QueryArrived {
            at_ms: self.clock.0,
            question: query.question.clone(),
        });

        // Queued thoughts that never started are preempted by the query.
        while let Some(pending) = self.pending_thoughts.pop_front() {
            self.log(TranscriptEvent::ThoughtSkipped {
                at_ms: self.clock.0,
                clip_index: pending.clip.clip_index,
                reason: SkipReason::QueryPending,
            });
        }

        let (context_clip, context_captions) = match self.segmenter.flush() {
            Some(clip) => {
                let captions = std::mem::take(&mut self.caption_buffer);
                self.log(TranscriptEvent::ClipClosed {
                    at_ms: self.clock.0,
                    clip_index: clip.clip_index,
                    frame_start: clip.frame_range.0,
                    frame_end: clip.frame_range.1,
                    visual_tokens: clip.total_visual_tokens,
                    flushed: true,
                });
                self.last_closed = Some((clip.clone(), captions.clone()));
                (Some(clip), captions)
            }
            None => match &self.last_closed {
                Some((clip, captions)) => (Some(clip.clone()), captions.clone()),
                None => (None, Vec::new()),
            },
        };

        if self.in_flight.is_some() {
            self.pending_query = Some((query, context_clip, context_captions));
            Ok(Vec::new())
        } else {
            Ok(vec![self.issue_answer(query, context_clip, &context_captions)])
        }
    }

    fn on_completion(&mut self, result: GenerationResult) -> Result<Vec<SessionAction>, SessionError> {
        self.advance_clock(result.completed_at)?;
        let in_flight = self.in_flight.take().ok_or(SessionError::UnexpectedCompletion)?;
        let mut actions = Vec::new();
        match in_flight.kind {
            GenerationKind::Thought { clip } => {
                if !result.text.is_empty() {
                    let mut entry = ThoughtEntry::new(
                        clip.clip_index,
                        clip.start_time,
                        clip.end_time,
                        result.text.clone(),
                    );
                    entry.generation_duration = result.duration();
                    self.memory = self.memory.update(&[entry])?;
                }
                self.log(TranscriptEvent::ThoughtCompleted {
                    at_ms: self.clock.0,
                    clip_index: clip.clip_index,
                    duration_ms: result.duration().0,
                    text: result.text,
                });
                if let Some((query, context_clip, captions)) = self.pending_query.take() {
                    actions.push(self.issue_answer(query, context_clip, &captions));
                } else {
                    actions.extend(self.drain_pending_thoughts());
                }
            }
            GenerationKind::Answer => {
                let record = AnswerRecord {
                    boxed_answer: extract_boxed(&result.text),
                    text: result.text.clone(),
                    answer_start_time: result.issued_at,
                    answer_end_time: result.completed_at,
                };
                self.log(TranscriptEvent::AnswerCompleted {
                    at_ms: self.clock.0,
                    duration_ms: result.duration().0,
                    text: result.text,
                    boxed: record.boxed_answer.clone(),
                });
                self.answers.push(record.clone());
                self.query_outstanding = false;
                actions.push(SessionAction::AnswerReady(record));
                actions.extend(self.drain_pending_thoughts());
            }
        }
        Ok(actions)
    }

    fn drain_pending_thoughts(&mut self) -> Vec<SessionAction> {
        let mut actions = Vec::new();
        while let Some(pending) = self.pending_thoughts.pop_front() {
            if self.thoughts_emitted >= self.config.max_thinking_times {
                self.log(TranscriptEvent::ThoughtSkipped {
                    at_ms: self.clock.0,
                    clip_index: pending.clip.clip_index,
                    reason: SkipReason::Cap,
                });
                continue;
            }
            actions.push(self.issue_thought(
                pending.clip,
                &pending.captions,
                pending.counts_as_miss,
            ));
            break;
        }
        actions
    }
}

/// Completed session: the full transcript plus one answer per query.
#[derive(Debug, Clone)]
pub struct SessionRun {
    pub transcript: SessionTranscript,
    pub answers: Vec<AnswerRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventClass {
    Completion = 0,
    Frame = 1,
    Query = 2,
}

/// Incremental event-loop driver around a [`Session`] and a backend.
///
/// Events are processed in `(time, class, insertion)` order with completions
/// first at equal instants, so a thought finishing exactly when the next clip
/// closes still counts as fitting the gap. Under [`ClockMode::VirtualClock`]
/// a run is deterministic; [`ClockMode::RealTime`] sleeps until each event's
/// wall offset before processing it.
pub struct SessionDriver<'a> {
    session: Session,
    backend: &'a mut dyn Backend,
    schedule: BTreeMap<(TimeMs, EventClass, u64), SessionEvent>,
    seq: u64,
    mode: ClockMode,
    wall_start: std::time::Instant,
}

impl<'a> SessionDriver<'a> {
    pub fn new(config: SessionConfig, backend: &'a mut dyn Backend) -> Result<Self, SessionError> {
        let mode = config.mode;
        Ok(SessionDriver {
            session: Session::new(config)?,
            backend,
            schedule: BTreeMap::new(),
            seq: 0,
            mode,
            wall_start: std::time::Instant::now(),
        })
    }

    pub fn clock(&self) -> TimeMs {
        self.session.clock()
    }

    pub fn transcript(&self) -> &SessionTranscript {
        self.session.transcript()
    }

    pub fn answers(&self) -> &[AnswerRecord] {
        self.session.answers()
    }

    pub fn enqueue_frame(&mut self, frame: FrameRecord) {
        self.schedule.insert(
            (frame.timestamp, EventClass::Frame, self.seq),
            SessionEvent::FrameArrived(frame),
        );
        self.seq += 1;
    }

    pub fn enqueue_query(&mut self, query: QueryEvent) {
        self.schedule.insert(
            (query.query_time, EventClass::Query, self.seq),
            SessionEvent::QueryArrived(query),
        );
        self.seq += 1;
    }

    fn abort_protocol(&self, error: SessionError) -> Box<SessionAbort> {
        Box::new(SessionAbort::Protocol {
            error,
            transcript: self.session.transcript().clone(),
            answers: self.session.answers().to_vec(),
        })
    }

    /// Process the next scheduled event, if any; true when one was processed.
    pub fn process_next(&mut self) -> Result<bool, Box<SessionAbort>> {
        let Some((&key, _)) = self.schedule.iter().next() else {
            return Ok(false);
        };
        let event = self.schedule.remove(&key).expect("key present");
        if self.mode == ClockMode::RealTime {
            let target = std::time::Duration::from_millis(key.0 .0);
            let elapsed = self.wall_start.elapsed();
            if target > elapsed {
                std::thread::sleep(target - elapsed);
            }
        }
        let actions = match self.session.step(event) {
            Ok(actions) => actions,
            Err(error) => return Err(self.abort_protocol(error)),
        };
        for action in actions {
            if let SessionAction::IssueGeneration { request } = action {
                let issued_at = self.session.clock();
                match self.backend.generate(&request, issued_at) {
                    Ok(result) => {
                        self.schedule.insert(
                            (result.completed_at, EventClass::Completion, self.seq),
                            SessionEvent::GenerationCompleted(result),
                        );
                        self.seq += 1;
                    }
                    Err(error) => {
                        return Err(Box::new(SessionAbort::Backend {
                            error,
                            transcript: self.session.transcript().clone(),
                            answers: self.session.answers().to_vec(),
                        }))
                    }
                }
            }
        }
        Ok(true)
    }

    /// Process every event scheduled at or before `limit`.
    pub fn run_until(&mut self, limit: TimeMs) -> Result<(), Box<SessionAbort>> {
        while self
            .schedule
            .iter()
            .next()
            .is_some_and(|(&(at, _, _), _)| at <= limit)
        {
            self.process_next()?;
        }
        Ok(())
    }

    /// Drain the whole schedule.
    pub fn run_to_completion(&mut self) -> Result<(), Box<SessionAbort>> {
        while self.process_next()? {}
        Ok(())
    }

    /// Process events until one more answer lands than `baseline`.
    pub fn run_until_answer(&mut self, baseline: usize) -> Result<(), Box<SessionAbort>> {
        while self.session.answers().len() <= baseline {
            if !self.process_next()? {
                return Err(self.abort_protocol(SessionError::UnexpectedCompletion));
            }
        }
        Ok(())
    }

    pub fn into_run(self) -> SessionRun {
        self.session.into_run()
    }
}

/// Drive a full session over a frame stream and query schedule.
pub fn run_session(
    config: &SessionConfig,
    frames: &[FrameRecord],
    queries: &[QueryEvent],
    backend: &mut dyn Backend,
) -> Result<SessionRun, Box<SessionAbort>> {
    let mut driver = match SessionDriver::new(config.clone(), backend) {
        Ok(driver) => driver,
        Err(error) => {
            return Err(Box::new(SessionAbort::Protocol {
                error,
                transcript: SessionTranscript::default(),
                answers: Vec::new(),
            }))
        }
    };
    for frame in frames {
        driver.enqueue_frame(frame.clone());
    }
    for query in queries {
        driver.enqueue_query(query.clone());
    }
    driver.run_to_completion()?;
    Ok(driver.into_run())
}

/// Latency report for the first query in the transcript.
///
/// Overlapped thinking is the portion of each thought's duration that fits
/// before the next clip closes (or the query arrives): time hidden inside the
/// stream's natural gaps. Deadline misses count delayed thought starts plus
/// deadline-dropped thoughts.
pub fn measure_latency(transcript: &SessionTranscript) -> Result<QaLatencyReport, MeasureError> {
    let query_at = transcript
        .events
        .iter()
        .find_map(|e| match e {
            TranscriptEvent::QueryArrived { at_ms, .. } => Some(*at_ms),
            _ => None,
        })
        .ok_or(MeasureError::IncompleteTranscript)?;
    let answer_at = transcript
        .events
        .iter()
        .find_map(|e| match e {
            TranscriptEvent::AnswerCompleted { at_ms, .. } if *at_ms >= query_at => Some(*at_ms),
            _ => None,
        })
        .ok_or(MeasureError::IncompleteTranscript)?;

    let last_event_at = transcript.events.last().map_or(0, |e| e.at_ms());
    let mut thinking_total = 0u64;
    let mut thinking_overlapped = 0u64;
    let mut deadline_misses = 0u32;

    for (idx, event) in transcript.events.iter().enumerate() {
        match event {
            TranscriptEvent::ThoughtStarted {
                at_ms: started,
                clip_index,
                deadline_missed,
                ..
            } => {
                if *deadline_missed {
                    deadline_misses += 1;
                }
                let completed = transcript.events[idx..].iter().find_map(|e| match e {
                    TranscriptEvent::ThoughtCompleted {
                        at_ms, clip_index: c, ..
                    } if c == clip_index => Some(*at_ms),
                    _ => None,
                });
                let Some(completed) = completed else { continue };
                if completed > answer_at {
                    continue;
                }
                thinking_total += completed - started;
                // The gap this thought must hide inside ends at the next clip
                // close after it started, else at the query, else at stream end.
                let window_end = transcript
                    .events
                    .iter()
                    .find_map(|e| match e {
                        TranscriptEvent::ClipClosed { at_ms, .. } if *at_ms > *started => {
                            Some(*at_ms)
                        }
                        _ => None,
                    })
                    .or(if query_at > *started { Some(query_at) } else { None })
                    .unwrap_or(last_event_at.max(completed));
                thinking_overlapped += completed.min(window_end).saturating_sub(*started);
            }
            TranscriptEvent::ThoughtSkipped {
                reason: SkipReason::Deadline,
                ..
            } => deadline_misses += 1,
            _ => {}
        }
    }

    Ok(QaLatencyReport {
        qa_latency: DurationMs(answer_at - query_at),
        thinking_time_total: DurationMs(thinking_total),
        thinking_time_overlapped: DurationMs(thinking_overlapped),
        deadline_misses,
    })
}
