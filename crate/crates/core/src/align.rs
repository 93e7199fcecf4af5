//! Embedding-based monotonic sentence alignment.
//!
//! Embeddings come in the EMB1 binary format: the magic `EMB1`, `n` and `d`
//! as little-endian u32, then `n·d` little-endian f32 values row-major. Row
//! ids live in a sidecar `<file>.ids` with one id per line.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const DEFAULT_SKIP_PENALTY: f64 = 0.25;
pub const DEFAULT_MARGIN_K: usize = 4;
pub const DEFAULT_LOW_CONFIDENCE: f64 = 0.5;
pub const NORM_TOLERANCE: f32 = 1e-4;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("bad magic bytes, expected EMB1")]
    BadMagic,
    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },
    #[error("sidecar has {ids} ids for {rows} rows")]
    IdCountMismatch { ids: usize, rows: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty document")]
    EmptyDocument,
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("unknown sentence id {0:?}")]
    UnknownId(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self, AlignError> {
        if dim == 0 {
            return Err(AlignError::InvalidMatrix("dimension must be at least 1".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(AlignError::InvalidMatrix(format!(
                "{} values for {} rows of dimension {dim}",
                data.len(),
                ids.len()
            )));
        }
        let mut m = EmbeddingMatrix {
            ids,
            dim,
            data,
            normalized: false,
        };
        m.normalized = m.rows_unit_norm();
        Ok(m)
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f32>]) -> Result<Self, AlignError> {
        let dim = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(AlignError::DimensionMismatch(dim, bad.len()));
        }
        if ids.len() != rows.len() {
            return Err(AlignError::IdCountMismatch {
                ids: ids.len(),
                rows: rows.len(),
            });
        }
        EmbeddingMatrix::new(ids, dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    fn rows_unit_norm(&self) -> bool {
        self.rows().all(|r| {
            let n = norm(r) as f32;
            (n - 1.0).abs() <= NORM_TOLERANCE
        })
    }

    /// L2-normalizes every non-zero row.
    pub fn renormalize(&mut self) {
        let dim = self.dim;
        for row in self.data.chunks_exact_mut(dim) {
            let n = norm(row);
            if n > 0.0 {
                for x in row.iter_mut() {
                    *x = (*x as f64 / n) as f32;
                }
            }
        }
        self.normalized = self.rows_unit_norm();
    }

    /// Rows reordered to follow `order`, looked up by id.
    pub fn select(&self, order: &[String]) -> Result<EmbeddingMatrix, AlignError> {
        let pos: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for id in order {
            let &i = pos
                .get(id.as_str())
                .ok_or_else(|| AlignError::UnknownId(id.clone()))?;
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix::new(order.to_vec(), self.dim, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// Parses EMB1 bytes; `ids` must hold one id per row.
    pub fn from_bytes(bytes: &[u8], ids: Vec<String>) -> Result<Self, AlignError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(AlignError::BadMagic);
        }
        if bytes.len() < 12 {
            return Err(AlignError::TruncatedFile {
                expected: 12,
                found: bytes.len(),
            });
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let expected = 12 + n * d * 4;
        if bytes.len() < expected {
            return Err(AlignError::TruncatedFile {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(AlignError::InvalidMatrix(format!(
                "{} trailing bytes",
                bytes.len() - expected
            )));
        }
        if ids.len() != n {
            return Err(AlignError::IdCountMismatch { ids: ids.len(), rows: n });
        }
        let data = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if d == 0 && n > 0 {
            return Err(AlignError::InvalidMatrix("dimension must be at least 1".into()));
        }
        EmbeddingMatrix::new(ids, d.max(1), data)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".ids");
    PathBuf::from(s)
}

/// Reads an EMB1 file and its `.ids` sidecar, optionally L2-renormalizing.
pub fn load_embeddings(path: impl AsRef<Path>, renormalize: bool) -> Result<EmbeddingMatrix, AlignError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let ids: Vec<String> = fs::read_to_string(sidecar_path(path))?
        .lines()
        .map(str::to_string)
        .collect();
    let mut m = EmbeddingMatrix::from_bytes(&bytes, ids)?;
    if renormalize {
        m.renormalize();
    }
    Ok(m)
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<(), AlignError> {
    let path = path.as_ref();
    fs::write(path, m.to_bytes())?;
    let mut f = fs::File::create(sidecar_path(path))?;
    for id in &m.ids {
        writeln!(f, "{id}")?;
    }
    Ok(())
}

/// Problems a strict consumer would warn about in an otherwise loadable file.
pub fn embedding_warnings(m: &EmbeddingMatrix) -> Vec<String> {
    let mut warnings = Vec::new();
    if !m.is_normalized() && !m.is_empty() {
        warnings.push("rows are not L2-normalized".to_string());
    }
    if m.data.iter().any(|x| !x.is_finite()) {
        warnings.push("non-finite values".to_string());
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = m.ids.iter().find(|id| !seen.insert(id.as_str())) {
        warnings.push(format!("duplicate id {dup:?}"));
    }
    if m.ids.iter().any(|id| id.is_empty()) {
        warnings.push("empty id".to_string());
    }
    warnings
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

fn mean_topk(x: &[f32], neighbors: &[&[f32]], k: usize) -> f64 {
    let mut sims: Vec<f64> = neighbors.iter().map(|z| cosine(x, z)).collect();
    sims.sort_by(|a, b| b.total_cmp(a));
    sims.iter().take(k).sum::<f64>()
}

/// Ratio-margin score: `cos(x,y)` divided by the average of the mean cosine
/// of `x` to its `k` best neighbors and of `y` to its `k` best neighbors.
pub fn margin_score(
    x: &[f32],
    y: &[f32],
    nn_x: &[&[f32]],
    nn_y: &[&[f32]],
    k: usize,
) -> Result<f64, AlignError> {
    let d = x.len();
    if y.len() != d {
        return Err(AlignError::DimensionMismatch(d, y.len()));
    }
    if let Some(z) = nn_x.iter().chain(nn_y).find(|z| z.len() != d) {
        return Err(AlignError::DimensionMismatch(d, z.len()));
    }
    if k == 0 || nn_x.len() < k || nn_y.len() < k {
        return Err(AlignError::InvalidMatrix(format!(
            "need k ≥ 1 and at least k neighbors (k={k}, {}/{})",
            nn_x.len(),
            nn_y.len()
        )));
    }
    let denom = (0.5 / k as f64) * (mean_topk(x, nn_x, k) + mean_topk(y, nn_y, k));
    Ok(cosine(x, y) / denom.max(1e-6))
}

/// Alignment bead shapes, listed in tie-break preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BeadKind {
    #[serde(rename = "1-1")]
    OneOne,
    #[serde(rename = "2-1")]
    TwoOne,
    #[serde(rename = "1-2")]
    OneTwo,
    #[serde(rename = "1-0")]
    SkipSrc,
    #[serde(rename = "0-1")]
    SkipTgt,
}

impl BeadKind {
    pub const ALL: [BeadKind; 5] = [
        BeadKind::OneOne,
        BeadKind::TwoOne,
        BeadKind::OneTwo,
        BeadKind::SkipSrc,
        BeadKind::SkipTgt,
    ];

    /// (source sentences, target sentences) consumed.
    pub fn shape(self) -> (usize, usize) {
        match self {
            BeadKind::OneOne => (1, 1),
            BeadKind::TwoOne => (2, 1),
            BeadKind::OneTwo => (1, 2),
            BeadKind::SkipSrc => (1, 0),
            BeadKind::SkipTgt => (0, 1),
        }
    }

    pub fn from_shape(src: usize, tgt: usize) -> Option<BeadKind> {
        BeadKind::ALL.into_iter().find(|b| b.shape() == (src, tgt))
    }

    pub fn is_match(self) -> bool {
        !matches!(self, BeadKind::SkipSrc | BeadKind::SkipTgt)
    }
}

impl fmt::Display for BeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, t) = self.shape();
        write!(f, "{s}-{t}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bead {
    pub src: (usize, usize),
    pub tgt: (usize, usize),
    pub cost: f64,
}

impl Bead {
    pub fn kind(&self) -> BeadKind {
        BeadKind::from_shape(self.src.1 - self.src.0, self.tgt.1 - self.tgt.0)
            .expect("beads are built from known shapes")
    }

    /// `1 − cost` for matched beads.
    pub fn similarity(&self) -> Option<f64> {
        self.kind().is_match().then(|| 1.0 - self.cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentPath {
    pub beads: Vec<Bead>,
}

impl AlignmentPath {
    pub fn total_cost(&self) -> f64 {
        self.beads.iter().fold(0.0, |acc, b| acc + b.cost)
    }

    pub fn kinds(&self) -> Vec<BeadKind> {
        self.beads.iter().map(Bead::kind).collect()
    }

    /// Checks coverage, monotonicity and span limits.
    pub fn check(&self, n_src: usize, n_tgt: usize) -> Result<(), String> {
        let (mut i, mut j) = (0, 0);
        for b in &self.beads {
            if b.src.0 != i || b.tgt.0 != j {
                return Err(format!("bead {:?}/{:?} does not continue at ({i},{j})", b.src, b.tgt));
            }
            let (ls, lt) = (b.src.1 - b.src.0, b.tgt.1 - b.tgt.0);
            if ls > 2 || lt > 2 || ls + lt == 0 || BeadKind::from_shape(ls, lt).is_none() {
                return Err(format!("bad bead shape {ls}-{lt}"));
            }
            i = b.src.1;
            j = b.tgt.1;
        }
        if (i, j) != (n_src, n_tgt) {
            return Err(format!("path ends at ({i},{j}), expected ({n_src},{n_tgt})"));
        }
        Ok(())
    }
}

/// Mean of rows `[from, to)`, L2-renormalized.
fn span_embedding(m: &EmbeddingMatrix, from: usize, to: usize) -> Vec<f32> {
    let mut acc = vec![0f64; m.dim];
    for i in from..to {
        for (a, &x) in acc.iter_mut().zip(m.row(i)) {
            *a += x as f64;
        }
    }
    let n = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return vec![0.0; m.dim];
    }
    acc.iter().map(|x| (x / n) as f32).collect()
}

/// Cost of a matched bead: `1 − cos` of the pooled span embeddings.
pub fn match_cost(src: &EmbeddingMatrix, s: (usize, usize), tgt: &EmbeddingMatrix, t: (usize, usize)) -> f64 {
    1.0 - cosine(&span_embedding(src, s.0, s.1), &span_embedding(tgt, t.0, t.1))
}

/// Minimum-cost monotonic alignment over 1-1, 2-1, 1-2, 1-0 and 0-1 beads.
///
/// Ties keep the preferred bead kind for the last bead into each cell
/// (1-1, then 2-1, 1-2, 1-0, 0-1).
pub fn align_documents(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    skip_penalty: f64,
) -> Result<AlignmentPath, AlignError> {
    if src.dim != tgt.dim {
        return Err(AlignError::DimensionMismatch(src.dim, tgt.dim));
    }
    if src.is_empty() || tgt.is_empty() {
        return Err(AlignError::EmptyDocument);
    }
    let (n, m) = (src.len(), tgt.len());
    let src_spans: Vec<[Vec<f32>; 2]> = (0..n)
        .map(|i| {
            [
                span_embedding(src, i, i + 1),
                if i + 2 <= n { span_embedding(src, i, i + 2) } else { Vec::new() },
            ]
        })
        .collect();
    let tgt_spans: Vec<[Vec<f32>; 2]> = (0..m)
        .map(|j| {
            [
                span_embedding(tgt, j, j + 1),
                if j + 2 <= m { span_embedding(tgt, j, j + 2) } else { Vec::new() },
            ]
        })
        .collect();

    let width = m + 1;
    let mut cost = vec![f64::INFINITY; (n + 1) * width];
    let mut back: Vec<Option<BeadKind>> = vec![None; (n + 1) * width];
    cost[0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best: Option<(f64, BeadKind)> = None;
            for kind in BeadKind::ALL {
                let (ds, dt) = kind.shape();
                if ds > i || dt > j {
                    continue;
                }
                let prev = cost[(i - ds) * width + (j - dt)];
                if !prev.is_finite() {
                    continue;
                }
                let step = if kind.is_match() {
                    let a = &src_spans[i - ds][ds - 1];
                    let b = &tgt_spans[j - dt][dt - 1];
                    1.0 - cosine(a, b)
                } else {
                    skip_penalty
                };
                let total = prev + step;
                if best.map_or(true, |(c, _)| total < c) {
                    best = Some((total, kind));
                }
            }
            if let Some((c, k)) = best {
                cost[i * width + j] = c;
                back[i * width + j] = Some(k);
            }
        }
    }

    let mut beads = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let kind = back[i * width + j].expect("every cell is reachable");
        let (ds, dt) = kind.shape();
        let bead_cost = if kind.is_match() {
            1.0 - cosine(&src_spans[i - ds][ds - 1], &tgt_spans[j - dt][dt - 1])
        } else {
            skip_penalty
        };
        beads.push(Bead {
            src: (i - ds, i),
            tgt: (j - dt, j),
            cost: bead_cost,
        });
        i -= ds;
        j -= dt;
    }
    beads.reverse();
    Ok(AlignmentPath { beads })
}

/// Aligns documents given in `src_order`/`tgt_order` id order, looking rows
/// up by id, and returns the id-level beads. Row storage order is irrelevant.
pub fn align_by_ids(
    src: &EmbeddingMatrix,
    src_order: &[String],
    tgt: &EmbeddingMatrix,
    tgt_order: &[String],
    skip_penalty: f64,
) -> Result<Vec<(Vec<String>, Vec<String>)>, AlignError> {
    let s = src.select(src_order)?;
    let t = tgt.select(tgt_order)?;
    let path = align_documents(&s, &t, skip_penalty)?;
    Ok(path
        .beads
        .iter()
        .map(|b| {
            (
                src_order[b.src.0..b.src.1].to_vec(),
                tgt_order[b.tgt.0..b.tgt.1].to_vec(),
            )
        })
        .collect())
}

/// One matched bead rendered with its texts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedPair {
    pub src_ids: Vec<String>,
    pub tgt_ids: Vec<String>,
    pub src_text: String,
    pub tgt_text: String,
    pub bead: BeadKind,
    pub similarity: f64,
    pub margin: f64,
    pub low_confidence: bool,
}

/// Parameters for turning a path into reviewed sentence pairs.
#[derive(Debug, Clone, Copy)]
pub struct PairOptions {
    pub margin_k: usize,
    pub low_confidence: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            margin_k: DEFAULT_MARGIN_K,
            low_confidence: DEFAULT_LOW_CONFIDENCE,
        }
    }
}

/// Renders matched beads as text pairs, joining merged spans with a space.
/// Margin neighbors are the rows of the opposite document; `k` is clamped
/// to the document sizes.
pub fn aligned_pairs<S: AsRef<str>>(
    path: &AlignmentPath,
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    src_texts: &[S],
    tgt_texts: &[S],
    opts: PairOptions,
) -> Result<Vec<AlignedPair>, AlignError> {
    if src_texts.len() != src.len() {
        return Err(AlignError::IdCountMismatch {
            ids: src_texts.len(),
            rows: src.len(),
        });
    }
    if tgt_texts.len() != tgt.len() {
        return Err(AlignError::IdCountMismatch {
            ids: tgt_texts.len(),
            rows: tgt.len(),
        });
    }
    let src_rows: Vec<&[f32]> = src.rows().collect();
    let tgt_rows: Vec<&[f32]> = tgt.rows().collect();
    let k = opts.margin_k.min(src.len()).min(tgt.len()).max(1);
    let join = |texts: &[S], span: (usize, usize)| {
        texts[span.0..span.1]
            .iter()
            .map(|t| t.as_ref().trim())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = Vec::new();
    for b in path.beads.iter().filter(|b| b.kind().is_match()) {
        let x = span_embedding(src, b.src.0, b.src.1);
        let y = span_embedding(tgt, b.tgt.0, b.tgt.1);
        let similarity = 1.0 - b.cost;
        let margin = margin_score(&x, &y, &tgt_rows, &src_rows, k)?;
        out.push(AlignedPair {
            src_ids: src.ids[b.src.0..b.src.1].to_vec(),
            tgt_ids: tgt.ids[b.tgt.0..b.tgt.1].to_vec(),
            src_text: join(src_texts, b.src),
            tgt_text: join(tgt_texts, b.tgt),
            bead: b.kind(),
            similarity,
            margin,
            low_confidence: similarity < opts.low_confidence,
        });
    }
    Ok(out)
}
