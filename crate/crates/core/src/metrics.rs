//! Corpus-level BLEU and ChrF++.
//!
//! Both metrics aggregate n-gram statistics over the whole corpus before
//! forming precisions, so they are invariant to pair order and duplication.
//! Word tokens come from whitespace splitting with every Unicode punctuation
//! character split off as its own token; matching is case-sensitive.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::lang::{Direction, Source};

pub const BLEU_MAX_ORDER: usize = 4;
pub const CHRF_CHAR_ORDER: usize = 6;
pub const CHRF_WORD_ORDER: usize = 2;
pub const CHRF_BETA: f64 = 2.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no pairs to score")]
    EmptyInput,
    #[error("empty reference for pair {0}")]
    EmptyReference(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalPair {
    pub hypothesis: String,
    pub reference: String,
    pub direction: Direction,
    pub source: Source,
}

pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

/// Whitespace split, then each punctuation character becomes its own token.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in word.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    out.push(&word[start..i]);
                }
                out.push(&word[i..i + c.len_utf8()]);
                start = i + c.len_utf8();
            }
        }
        if start < word.len() {
            out.push(&word[start..]);
        }
    }
    out
}

fn ngram_counts<T: Hash + Eq + Clone>(items: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Matched (clipped), hypothesis and reference n-gram totals for one order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NgramStats {
    pub matched: u64,
    pub hyp_total: u64,
    pub ref_total: u64,
}

impl NgramStats {
    fn add(&mut self, o: &NgramStats) {
        self.matched += o.matched;
        self.hyp_total += o.hyp_total;
        self.ref_total += o.ref_total;
    }
}

fn order_stats<T: Hash + Eq + Clone>(hyp: &[T], reference: &[T], n: usize) -> NgramStats {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    NgramStats {
        matched,
        hyp_total: hyp.len().saturating_sub(n - 1) as u64,
        ref_total: reference.len().saturating_sub(n - 1) as u64,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BleuStats {
    pub orders: [NgramStats; BLEU_MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    fn add(mut self, o: &BleuStats) -> Self {
        for (a, b) in self.orders.iter_mut().zip(&o.orders) {
            a.add(b);
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }

    pub fn for_pair(hyp: &str, reference: &str) -> Self {
        let h = tokenize(hyp);
        let r = tokenize(reference);
        let mut s = BleuStats {
            hyp_len: h.len() as u64,
            ref_len: r.len() as u64,
            ..Default::default()
        };
        for n in 1..=BLEU_MAX_ORDER {
            s.orders[n - 1] = order_stats(&h, &r, n);
        }
        s
    }

    pub fn score(&self) -> f64 {
        let c = self.hyp_len as f64;
        let r = self.ref_len as f64;
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for o in &self.orders {
            if o.matched == 0 || o.hyp_total == 0 {
                return 0.0;
            }
            log_sum += 0.25 * (o.matched as f64 / o.hyp_total as f64).ln();
        }
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        bp * log_sum.exp() * 100.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChrfStats {
    pub chars: [NgramStats; CHRF_CHAR_ORDER],
    pub words: [NgramStats; CHRF_WORD_ORDER],
}

impl ChrfStats {
    fn add(mut self, o: &ChrfStats) -> Self {
        for (a, b) in self.chars.iter_mut().zip(&o.chars) {
            a.add(b);
        }
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            a.add(b);
        }
        self
    }

    pub fn for_pair(hyp: &str, reference: &str) -> Self {
        let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
        let hw = tokenize(hyp);
        let rw = tokenize(reference);
        let mut s = ChrfStats::default();
        for n in 1..=CHRF_CHAR_ORDER {
            s.chars[n - 1] = order_stats(&hc, &rc, n);
        }
        for n in 1..=CHRF_WORD_ORDER {
            s.words[n - 1] = order_stats(&hw, &rw, n);
        }
        s
    }

    pub fn score(&self) -> f64 {
        let total: f64 = self.chars.iter().chain(&self.words).map(f_beta).sum();
        total / (CHRF_CHAR_ORDER + CHRF_WORD_ORDER) as f64 * 100.0
    }
}

fn f_beta(s: &NgramStats) -> f64 {
    let p = if s.hyp_total == 0 { 0.0 } else { s.matched as f64 / s.hyp_total as f64 };
    let r = if s.ref_total == 0 { 0.0 } else { s.matched as f64 / s.ref_total as f64 };
    if p + r == 0.0 {
        return 0.0;
    }
    let b2 = CHRF_BETA * CHRF_BETA;
    (1.0 + b2) * p * r / (b2 * p + r)
}

fn check(pairs: &[(&str, &str)]) -> Result<(), MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if let Some(i) = pairs.iter().position(|(_, r)| r.trim().is_empty()) {
        return Err(MetricsError::EmptyReference(i));
    }
    Ok(())
}

/// Corpus BLEU over `(hypothesis, reference)` pairs, 0–100.
pub fn bleu(pairs: &[(&str, &str)]) -> Result<f64, MetricsError> {
    check(pairs)?;
    let stats = pairs
        .par_iter()
        .map(|(h, r)| BleuStats::for_pair(h, r))
        .reduce(BleuStats::default, |a, b| a.add(&b));
    Ok(stats.score())
}

/// Corpus ChrF++ (character orders 1–6, word orders 1–2, β = 2), 0–100.
pub fn chrfpp(pairs: &[(&str, &str)]) -> Result<f64, MetricsError> {
    check(pairs)?;
    let stats = pairs
        .par_iter()
        .map(|(h, r)| ChrfStats::for_pair(h, r))
        .reduce(ChrfStats::default, |a, b| a.add(&b));
    Ok(stats.score())
}

fn as_refs(pairs: &[EvalPair]) -> Vec<(&str, &str)> {
    pairs
        .iter()
        .map(|p| (p.hypothesis.as_str(), p.reference.as_str()))
        .collect()
}

pub fn bleu_corpus(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    bleu(&as_refs(pairs))
}

pub fn chrfpp_corpus(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    chrfpp(&as_refs(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub bleu: f64,
    pub chrfpp: f64,
    pub n: usize,
}

/// Report column: everything, or one source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    All,
    Source(Source),
}

impl Column {
    pub fn title(&self) -> String {
        match self {
            Column::All => "All".into(),
            Column::Source(s) => s.title(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub direction: String,
    pub cells: BTreeMap<String, Cell>,
}

/// Scores per direction (rows) and per source (columns), plus `All`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub rows: Vec<(Direction, Vec<(Column, Cell)>)>,
}

impl ScoreReport {
    pub fn columns(&self) -> Vec<Column> {
        let mut cols: Vec<Column> = self
            .rows
            .iter()
            .flat_map(|(_, cells)| cells.iter().map(|(c, _)| c.clone()))
            .collect();
        cols.sort();
        cols.dedup();
        cols
    }

    pub fn cell(&self, direction: &Direction, column: &Column) -> Option<&Cell> {
        self.rows
            .iter()
            .find(|(d, _)| d == direction)
            .and_then(|(_, cells)| cells.iter().find(|(c, _)| c == column).map(|(_, cell)| cell))
    }

    /// Plain-text table of one metric with two decimals.
    pub fn render(&self, metric: Metric) -> String {
        let cols = self.columns();
        let label_width = self
            .rows
            .iter()
            .map(|(d, _)| d.label().chars().count())
            .max()
            .unwrap_or(0)
            .max(metric.name().len());
        let mut out = String::new();
        let _ = write!(out, "{:<label_width$}", metric.name());
        for c in &cols {
            let _ = write!(out, "  {:>7}", c.title());
        }
        out.push('\n');
        for (d, cells) in &self.rows {
            let _ = write!(out, "{:<label_width$}", d.label());
            for c in &cols {
                match cells.iter().find(|(cc, _)| cc == c) {
                    Some((_, cell)) => {
                        let v = match metric {
                            Metric::Bleu => cell.bleu,
                            Metric::Chrfpp => cell.chrfpp,
                        };
                        let _ = write!(out, "  {v:>7.2}");
                    }
                    None => {
                        let _ = write!(out, "  {:>7}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<ReportRow> = self
            .rows
            .iter()
            .map(|(d, cells)| ReportRow {
                direction: d.label(),
                cells: cells.iter().map(|(c, cell)| (c.title(), *cell)).collect(),
            })
            .collect();
        let cols: Vec<String> = self.columns().iter().map(Column::title).collect();
        serde_json::json!({ "columns": cols, "rows": rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Bleu,
    Chrfpp,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Bleu => "BLEU",
            Metric::Chrfpp => "ChrF++",
        }
    }
}

/// Builds the direction × source table. Rows follow first appearance of each
/// direction in `pairs`; `All` is scored over the concatenation of the row's
/// pairs, not averaged from the columns.
pub fn build_report(pairs: &[EvalPair]) -> Result<ScoreReport, MetricsError> {
    let mut order: Vec<Direction> = Vec::new();
    let mut groups: HashMap<Direction, Vec<&EvalPair>> = HashMap::new();
    for p in pairs {
        if !groups.contains_key(&p.direction) {
            order.push(p.direction.clone());
        }
        groups.entry(p.direction.clone()).or_default().push(p);
    }
    let score = |ps: &[&EvalPair]| -> Result<Cell, MetricsError> {
        let refs: Vec<(&str, &str)> = ps
            .iter()
            .map(|p| (p.hypothesis.as_str(), p.reference.as_str()))
            .collect();
        Ok(Cell {
            bleu: bleu(&refs)?,
            chrfpp: chrfpp(&refs)?,
            n: ps.len(),
        })
    };
    let mut rows = Vec::new();
    for d in order {
        let ps = &groups[&d];
        let mut cells = vec![(Column::All, score(ps)?)];
        let mut by_source: BTreeMap<&Source, Vec<&EvalPair>> = BTreeMap::new();
        for p in ps {
            by_source.entry(&p.source).or_default().push(p);
        }
        for (s, sp) in by_source {
            cells.push((Column::Source(s.clone()), score(&sp)?));
        }
        rows.push((d, cells));
    }
    Ok(ScoreReport { rows })
}
