//! Streaming video attention mask.
//!
//! Row `i` may attend to column `j` iff `j <= i` and either token `j` is text
//! or fewer than `L` visual tokens lie strictly after `j` up to and including
//! `i`. Text tokens stay causally visible forever; visual tokens fall out of
//! a sliding window of the latest `L` visual tokens.
//!
//! Two independent constructions are provided: [`build_streaming_mask`] uses
//! prefix counts and is the production path; [`oracle_mask`] evaluates the
//! defining predicate cell by cell with a fresh summation and exists to check
//! the first. A compact per-row descriptor form ([`build_mask_descriptor`])
//! carries the same information without materializing `n x n` cells.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default additive penalty standing in for "minus infinity"; large enough to
/// zero out a softmax row in f32 while staying file-serializable.
pub const DEFAULT_DISALLOWED_SENTINEL: f64 = -1.0e9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("visual window size L must be at least 1")]
    ZeroWindow,
    #[error("token type sequence must be non-empty")]
    EmptySequence,
    #[error("row index {index} out of range for {n} tokens")]
    RowOutOfRange { index: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenType {
    Visual,
    Text,
}

/// Ordered token types for one packed sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTypeSequence {
    types: Vec<TokenType>,
}

impl TokenTypeSequence {
    pub fn new(types: Vec<TokenType>) -> Result<Self, MaskError> {
        if types.is_empty() {
            return Err(MaskError::EmptySequence);
        }
        Ok(TokenTypeSequence { types })
    }

    /// Parse compact `V`/`T` notation, e.g. `"VVTV"`.
    pub fn parse(spec: &str) -> Result<Self, MaskError> {
        let types = spec
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'V' | 'v' => Ok(TokenType::Visual),
                'T' | 't' => Ok(TokenType::Text),
                _ => Err(MaskError::EmptySequence),
            })
            .collect::<Result<Vec<_>, _>>()?;
        TokenTypeSequence::new(types)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[TokenType] {
        &self.types
    }

    pub fn is_visual(&self, index: usize) -> bool {
        self.types[index] == TokenType::Visual
    }
}

/// Dense boolean allow matrix; entry `(i, j)` is true iff token `i` may attend
/// to token `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllowMatrix {
    n: usize,
    rows: Vec<Vec<bool>>,
}

impl AllowMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Additive view: allowed cells map to `0.0`, disallowed cells to the
    /// sentinel penalty.
    pub fn additive(&self, disallowed_sentinel: f64) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&allowed| if allowed { 0.0 } else { disallowed_sentinel })
                    .collect()
            })
            .collect()
    }
}

/// Per-row descriptor form: for each row the earliest visible visual column.
/// Text columns are always visible up to the diagonal, so this plus causality
/// reconstructs the full matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskDescriptor {
    n: usize,
    l: u32,
    /// `visual_window_start[i]` = smallest visual column visible from row `i`,
    /// or `None` when no visual column at or before `i` is visible.
    visual_window_start: Vec<Option<usize>>,
}

impl MaskDescriptor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn visual_window_start(&self, i: usize) -> Option<usize> {
        self.visual_window_start[i]
    }

    pub fn allows(&self, i: usize, j: usize, seq: &TokenTypeSequence) -> bool {
        if j > i {
            return false;
        }
        if !seq.is_visual(j) {
            return true;
        }
        match self.visual_window_start[i] {
            Some(start) => j >= start,
            None => false,
        }
    }

    pub fn to_dense(&self, seq: &TokenTypeSequence) -> AllowMatrix {
        let rows = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.allows(i, j, seq)).collect())
            .collect();
        AllowMatrix { n: self.n, rows }
    }
}

/// Sequences up to this length materialize densely; longer ones stay in
/// descriptor form.
pub const DENSE_MATERIALIZATION_LIMIT: usize = 4096;

/// Mask in whichever representation suits the sequence length. Both views
/// answer `allows` identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamingMask {
    Dense(AllowMatrix),
    Descriptor(MaskDescriptor),
}

impl StreamingMask {
    pub fn build(seq: &TokenTypeSequence, l: u32) -> Result<Self, MaskError> {
        if seq.len() <= DENSE_MATERIALIZATION_LIMIT {
            Ok(StreamingMask::Dense(build_streaming_mask(seq, l)?))
        } else {
            Ok(StreamingMask::Descriptor(build_mask_descriptor(seq, l)?))
        }
    }

    pub fn n(&self) -> usize {
        match self {
            StreamingMask::Dense(mask) => mask.n(),
            StreamingMask::Descriptor(descriptor) => descriptor.n(),
        }
    }

    pub fn allows(&self, i: usize, j: usize, seq: &TokenTypeSequence) -> bool {
        match self {
            StreamingMask::Dense(mask) => mask.allows(i, j),
            StreamingMask::Descriptor(descriptor) => descriptor.allows(i, j, seq),
        }
    }
}

/// Build the mask from prefix visual counts: `O(n^2)` cell fill, `O(n)` state.
pub fn build_streaming_mask(seq: &TokenTypeSequence, l: u32) -> Result<AllowMatrix, MaskError> {
    if l == 0 {
        return Err(MaskError::ZeroWindow);
    }
    let n = seq.len();
    // visual_prefix[x] = number of visual tokens among indices [0, x).
    let mut visual_prefix = vec![0u32; n + 1];
    for j in 0..n {
        visual_prefix[j + 1] = visual_prefix[j] + u32::from(seq.is_visual(j));
    }
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    j <= i
                        && (!seq.is_visual(j) || visual_prefix[i + 1] - visual_prefix[j + 1] < l)
                })
                .collect()
        })
        .collect();
    Ok(AllowMatrix { n, rows })
}

/// Literal evaluation of the mask definition with a fresh summation per cell.
/// Cubic on purpose; kept as the reference the fast path is checked against.
pub fn oracle_mask(seq: &TokenTypeSequence, l: u32) -> Result<AllowMatrix, MaskError> {
    if l == 0 {
        return Err(MaskError::ZeroWindow);
    }
    let n = seq.len();
    let mut rows = vec![vec![false; n]; n];
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in 0..n {
            if j > i {
                continue;
            }
            if !seq.is_visual(j) {
                rows[i][j] = true;
                continue;
            }
            let mut newer_visual = 0u32;
            for t in (j + 1)..=i {
                if seq.is_visual(t) {
                    newer_visual += 1;
                }
            }
            rows[i][j] = newer_visual < l;
        }
    }
    Ok(AllowMatrix { n, rows })
}

/// Descriptor construction in `O(n)` via a two-pointer window.
pub fn build_mask_descriptor(seq: &TokenTypeSequence, l: u32) -> Result<MaskDescriptor, MaskError> {
    if l == 0 {
        return Err(MaskError::ZeroWindow);
    }
    let n = seq.len();
    let mut starts = Vec::with_capacity(n);
    // Indices of the most recent L visual tokens, oldest first.
    let mut window: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for i in 0..n {
        if seq.is_visual(i) {
            window.push_back(i);
            if window.len() > l as usize {
                window.pop_front();
            }
        }
        starts.push(window.front().copied());
    }
    Ok(MaskDescriptor {
        n,
        l,
        visual_window_start: starts,
    })
}

/// Visual columns visible from row `i`: a contiguous suffix of the visual
/// indices up to `i`, of size at most `L`.
pub fn visible_visual_window(
    mask: &AllowMatrix,
    seq: &TokenTypeSequence,
    i: usize,
) -> Result<Vec<usize>, MaskError> {
    if i >= mask.n() {
        return Err(MaskError::RowOutOfRange {
            index: i,
            n: mask.n(),
        });
    }
    Ok((0..=i)
        .filter(|&j| seq.is_visual(j) && mask.allows(i, j))
        .collect())
}

/// The CLI dump form: header `n L`, then one `0`/`1` row per token.
pub fn render_mask_dump(mask: &AllowMatrix, l: u32) -> String {
    let mut out = format!("{} {}\n", mask.n(), l);
    for row in mask.rows() {
        for &allowed in row {
            out.push(if allowed { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}
