//! Backend that replays a recorded generation trace, one record per call.

use super::{estimate_tokens, finish_result, Backend, BackendError, GenerationRequest, GenerationResult};
use crate::time::{DurationMs, TimeMs};
use crate::trace;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One recorded generation. Wire form:
/// `{"call_index": 0, "text": "...", "duration_ms": 120}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub call_index: u64,
    pub text: String,
    pub duration_ms: u64,
}

/// Replays records in call order for a single session; errors when the trace
/// is exhausted.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    records: Vec<ReplayRecord>,
    cursor: usize,
}

impl ReplayBackend {
    pub fn new(records: Vec<ReplayRecord>) -> Result<Self, BackendError> {
        for (i, record) in records.iter().enumerate() {
            if record.call_index != i as u64 {
                return Err(BackendError::ReplayInvalid(format!(
                    "record {} has call_index {}, expected {}",
                    i, record.call_index, i
                )));
            }
        }
        Ok(ReplayBackend { records, cursor: 0 })
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let records = trace::read_jsonl_file::<ReplayRecord>(path)
            .map_err(|e| BackendError::ReplayInvalid(e.to_string()))?;
        ReplayBackend::new(records)
    }

    pub fn remaining(&self) -> usize {
        self.records.len() - self.cursor
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn generate(
        &mut self,
        request: &GenerationRequest,
        issued_at: TimeMs,
    ) -> Result<GenerationResult, BackendError> {
        let record = self
            .records
            .get(self.cursor)
            .ok_or(BackendError::ReplayExhausted {
                calls: self.records.len(),
            })?;
        self.cursor += 1;
        Ok(finish_result(
            request,
            issued_at,
            record.text.clone(),
            estimate_tokens(&record.text),
            DurationMs(record.duration_ms),
        ))
    }
}
