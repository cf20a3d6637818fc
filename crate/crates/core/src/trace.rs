//! Line-delimited JSON record I/O shared by every trace format.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at {path}:{line}: {source}")]
    Malformed {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Parse one record per non-empty line.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(reader: R, path: &str) -> Result<Vec<T>, TraceError> {
    let reader = BufReader::new(reader);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| TraceError::Io {
            path: path.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| TraceError::Malformed {
            path: path.to_string(),
            line: idx + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, TraceError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| TraceError::Io {
        path: display.clone(),
        source,
    })?;
    read_jsonl(file, &display)
}

/// Serialize records one per line. The output is deterministic: struct fields
/// keep declaration order.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, records: &[T]) -> Result<(), TraceError> {
    let display = path.display().to_string();
    let file = File::create(path).map_err(|source| TraceError::Io {
        path: display.clone(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    writer
        .write_all(to_jsonl(records).as_bytes())
        .map_err(|source| TraceError::Io {
            path: display,
            source,
        })
}
