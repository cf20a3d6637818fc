//! Clip boundary detection over the incoming frame stream.
//!
//! Frames accumulate into a pending buffer; when the buffered visual tokens
//! reach the capacity `L`, all pending frames close into one clip. Frames are
//! atomic: the frame that reaches capacity is included, so a non-final clip
//! holds `L <= tokens < L + max member frame size`. A frame larger than `L`
//! on an empty buffer closes immediately as a single-frame clip.

use crate::stream_model::{Clip, FrameRecord};
use crate::time::TimeMs;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmenterError {
    #[error("rejected frame {frame_index}: {field} must increase past {previous}")]
    NonMonotonic {
        frame_index: u64,
        field: &'static str,
        previous: String,
    },
    #[error("rejected frame {frame_index}: visual_tokens must be at least 1")]
    ZeroTokens { frame_index: u64 },
    #[error("clip capacity L must be at least 1")]
    ZeroCapacity,
}

/// Accumulates frames until the capacity rule closes a clip.
#[derive(Debug, Clone, Default)]
pub struct Segmenter {
    pending_frames: Vec<FrameRecord>,
    accumulated_tokens: u64,
    next_clip_index: u32,
    last_frame_index: Option<u64>,
    last_timestamp: Option<TimeMs>,
}

impl Segmenter {
    pub fn new() -> Self {
        Segmenter {
            next_clip_index: 1,
            ..Segmenter::default()
        }
    }

    pub fn pending_frames(&self) -> &[FrameRecord] {
        &self.pending_frames
    }

    pub fn accumulated_tokens(&self) -> u64 {
        self.accumulated_tokens
    }

    pub fn next_clip_index(&self) -> u32 {
        self.next_clip_index
    }

    /// Append one frame; returns the closed clip when the buffer reaches `l`.
    pub fn ingest_frame(
        &mut self,
        frame: FrameRecord,
        l: u32,
    ) -> Result<Option<Clip>, SegmenterError> {
        if l == 0 {
            return Err(SegmenterError::ZeroCapacity);
        }
        if frame.visual_token_count == 0 {
            return Err(SegmenterError::ZeroTokens {
                frame_index: frame.frame_index,
            });
        }
        if let Some(last) = self.last_frame_index {
            if frame.frame_index <= last {
                return Err(SegmenterError::NonMonotonic {
                    frame_index: frame.frame_index,
                    field: "frame_index",
                    previous: last.to_string(),
                });
            }
        }
        if let Some(last) = self.last_timestamp {
            if frame.timestamp < last {
                return Err(SegmenterError::NonMonotonic {
                    frame_index: frame.frame_index,
                    field: "timestamp_s",
                    previous: last.to_string(),
                });
            }
        }

        self.last_frame_index = Some(frame.frame_index);
        self.last_timestamp = Some(frame.timestamp);
        self.accumulated_tokens += u64::from(frame.visual_token_count);
        self.pending_frames.push(frame);

        if self.accumulated_tokens >= u64::from(l) {
            Ok(Some(self.close_pending()))
        } else {
            Ok(None)
        }
    }

    /// Close any pending frames into a final, possibly under-capacity clip.
    pub fn flush(&mut self) -> Option<Clip> {
        if self.pending_frames.is_empty() {
            None
        } else {
            Some(self.close_pending())
        }
    }

    fn close_pending(&mut self) -> Clip {
        let frames = std::mem::take(&mut self.pending_frames);
        let total = self.accumulated_tokens;
        self.accumulated_tokens = 0;
        let clip = Clip {
            clip_index: self.next_clip_index,
            frame_range: (
                frames.first().expect("non-empty").frame_index,
                frames.last().expect("non-empty").frame_index,
            ),
            start_time: frames.first().expect("non-empty").timestamp,
            end_time: frames.last().expect("non-empty").timestamp,
            total_visual_tokens: total,
        };
        self.next_clip_index += 1;
        clip
    }
}

/// Segment a whole stream at once. Equivalent to ingesting every frame and
/// flushing; the trailing partial clip, if any, is included.
pub fn segment_all(frames: &[FrameRecord], l: u32) -> Result<Vec<Clip>, SegmenterError> {
    let mut segmenter = Segmenter::new();
    let mut clips = Vec::new();
    for frame in frames {
        if let Some(clip) = segmenter.ingest_frame(frame.clone(), l)? {
            clips.push(clip);
        }
    }
    if let Some(clip) = segmenter.flush() {
        clips.push(clip);
    }
    Ok(clips)
}
