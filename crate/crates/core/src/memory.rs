//! Long-term textual memory with FIFO eviction.
//!
//! Memory is a value type: `update` returns a new state, leaving the caller to
//! serialize writes per session. Two budgets bound growth — an entry count and
//! a rendered character count — and whichever binds first evicts the earliest
//! entries whole; thought text is never truncated.

use crate::stream_model::ThoughtEntry;
use crate::trace;
use thiserror::Error;

/// Rendered line for an empty memory; keeps prompts well-formed before the
/// first thought lands.
pub const EMPTY_MEMORY_MARKER: &str = "No prior video memory.";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("thought for clip {incoming} does not follow stored clip {newest}")]
    OutOfOrder { incoming: u32, newest: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    entries: Vec<ThoughtEntry>,
    budget_entries: usize,
    budget_chars: usize,
}

impl MemoryState {
    pub fn new(budget_entries: usize, budget_chars: usize) -> Self {
        MemoryState {
            entries: Vec::new(),
            budget_entries: budget_entries.max(1),
            budget_chars: budget_chars.max(1),
        }
    }

    pub fn entries(&self) -> &[ThoughtEntry] {
        &self.entries
    }

    pub fn budget_entries(&self) -> usize {
        self.budget_entries
    }

    pub fn budget_chars(&self) -> usize {
        self.budget_chars
    }

    /// Append thoughts in order, then evict the earliest entries while either
    /// budget is exceeded.
    pub fn update(&self, new_thoughts: &[ThoughtEntry]) -> Result<MemoryState, MemoryError> {
        let mut newest = self.entries.last().map(|e| e.clip_index);
        for thought in new_thoughts {
            if let Some(n) = newest {
                if thought.clip_index <= n {
                    return Err(MemoryError::OutOfOrder {
                        incoming: thought.clip_index,
                        newest: n,
                    });
                }
            }
            newest = Some(thought.clip_index);
        }

        let mut entries = self.entries.clone();
        entries.extend(new_thoughts.iter().cloned());
        let mut start = 0usize;
        while entries.len() - start > self.budget_entries
            || rendered_chars(&entries[start..]) > self.budget_chars
        {
            start += 1;
        }
        Ok(MemoryState {
            entries: entries.split_off(start),
            budget_entries: self.budget_entries,
            budget_chars: self.budget_chars,
        })
    }

    /// Prompt-side rendering: one `Time <start>-<end>s: <text>` line per entry,
    /// oldest first; an explicit marker when empty.
    pub fn render(&self) -> String {
        if self.entries.is_empty() {
            return EMPTY_MEMORY_MARKER.to_string();
        }
        self.entries
            .iter()
            .map(render_entry)
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Character count charged against `budget_chars` (entries only; the
    /// empty-memory marker is not charged).
    pub fn rendered_chars(&self) -> usize {
        rendered_chars(&self.entries)
    }

    /// Snapshot in the line-delimited record form
    /// (`clip_index`, `start_s`, `end_s`, `text` per line).
    pub fn to_snapshot(&self) -> String {
        trace::to_jsonl(&self.entries)
    }
}

fn render_entry(entry: &ThoughtEntry) -> String {
    format!(
        "Time {}-{}s: {}",
        entry.start_time.render_secs(),
        entry.end_time.render_secs(),
        entry.text
    )
}

fn rendered_chars(entries: &[ThoughtEntry]) -> usize {
    if entries.is_empty() {
        return 0;
    }
    let line_chars: usize = entries.iter().map(|e| render_entry(e).chars().count()).sum();
    line_chars + entries.len() - 1
}
