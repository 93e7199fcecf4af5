//! Byte-pair-encoding merge learning, tokenization and vocabulary extension.
//!
//! Words are whitespace tokens; the end-of-word marker is fused onto the
//! last character (`a b c</w>`). Learning repeatedly merges the most
//! frequent adjacent symbol pair, breaking frequency ties by the
//! lexicographically smallest `(left, right)`, and stops once no pair occurs
//! at least twice.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_END_OF_WORD: &str = "</w>";
pub const DEFAULT_NUM_MERGES: usize = 8000;

#[derive(Debug, Error)]
pub enum BpeError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("special token {0:?} already present")]
    DuplicateSpecial(String),
    #[error("end-of-word markers differ: {0:?} vs {1:?}")]
    EndOfWordMismatch(String, String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ModelFile {
    merges: Vec<(String, String)>,
    vocab: Vec<String>,
    #[serde(default)]
    specials: Vec<String>,
    #[serde(default = "default_eow")]
    end_of_word: String,
    #[serde(default)]
    base_vocab_size: Option<usize>,
}

fn default_eow() -> String {
    DEFAULT_END_OF_WORD.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: Vec<String>,
    specials: Vec<String>,
    end_of_word: String,
    base_vocab_size: usize,
    index: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
}

impl TryFrom<ModelFile> for BpeModel {
    type Error = BpeError;
    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        let base = f.base_vocab_size.unwrap_or(f.vocab.len());
        BpeModel::from_parts(f.merges, f.vocab, f.specials, f.end_of_word, base)
    }
}

impl From<BpeModel> for ModelFile {
    fn from(m: BpeModel) -> Self {
        ModelFile {
            merges: m.merges,
            vocab: m.vocab,
            specials: m.specials,
            end_of_word: m.end_of_word,
            base_vocab_size: Some(m.base_vocab_size),
        }
    }
}

/// One output token; `id` is `None` for symbols outside the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub id: Option<u32>,
}

impl BpeModel {
    pub fn from_parts(
        merges: Vec<(String, String)>,
        vocab: Vec<String>,
        specials: Vec<String>,
        end_of_word: String,
        base_vocab_size: usize,
    ) -> Result<Self, BpeError> {
        if end_of_word.is_empty() {
            return Err(BpeError::InvalidModel("empty end-of-word marker".into()));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, t) in vocab.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(BpeError::InvalidModel(format!("duplicate vocab token {t:?}")));
            }
        }
        if base_vocab_size > vocab.len() {
            return Err(BpeError::InvalidModel("base_vocab_size exceeds vocab".into()));
        }
        let special_set: HashSet<&str> = specials.iter().map(String::as_str).collect();
        if let Some(s) = specials.iter().find(|s| !index.contains_key(*s)) {
            return Err(BpeError::InvalidModel(format!("special {s:?} not in vocab")));
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            if special_set.contains(l.as_str()) || special_set.contains(r.as_str()) {
                return Err(BpeError::InvalidModel(format!("merge uses special ({l:?}, {r:?})")));
            }
            if !index.contains_key(&format!("{l}{r}")) {
                return Err(BpeError::InvalidModel(format!("merge result {l}{r:?} not in vocab")));
            }
            ranks.entry((l.clone(), r.clone())).or_insert(rank);
        }
        Ok(BpeModel {
            merges,
            vocab,
            specials,
            end_of_word,
            base_vocab_size,
            index,
            ranks,
        })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Tokens in id order.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn specials(&self) -> &[String] {
        &self.specials
    }

    pub fn end_of_word(&self) -> &str {
        &self.end_of_word
    }

    /// Size of the vocabulary this model was extended from (or its own size).
    pub fn base_vocab_size(&self) -> usize {
        self.base_vocab_size
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    fn is_special(&self, token: &str) -> bool {
        self.specials.iter().any(|s| s == token)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BpeError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BpeError> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }

    fn word_symbols(&self, word: &str) -> Vec<String> {
        initial_symbols(word, &self.end_of_word)
    }

    /// Applies merges to one word in learned order.
    fn segment(&self, word: &str) -> Vec<String> {
        let mut symbols = self.word_symbols(word);
        let mut floor = 0usize;
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .filter(|&r| r >= floor)
                .min();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            symbols = apply_merge(&symbols, l, r);
            floor = rank + 1;
        }
        symbols
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokenize_with_ids(text).into_iter().map(|t| t.text).collect()
    }

    pub fn tokenize_with_ids(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            if self.is_special(word) {
                out.push(Token {
                    text: word.to_string(),
                    id: self.id(word),
                });
                continue;
            }
            for sym in self.segment(word) {
                let id = self.id(&sym);
                out.push(Token { text: sym, id });
            }
        }
        out
    }

    /// Inverse of [`BpeModel::tokenize`] for single-space separated text.
    pub fn detokenize<S: AsRef<str>>(&self, tokens: &[S]) -> String {
        let mut out = String::new();
        for t in tokens {
            let t = t.as_ref();
            if self.is_special(t) {
                out.push_str(t);
                out.push(' ');
            } else if let Some(stem) = t.strip_suffix(self.end_of_word.as_str()) {
                out.push_str(stem);
                out.push(' ');
            } else {
                out.push_str(t);
            }
        }
        if out.ends_with(' ') {
            out.pop();
        }
        out
    }
}

fn initial_symbols(word: &str, eow: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(eow);
    }
    symbols
}

fn apply_merge(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: String,
    right: String,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Learner {
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    counts: HashMap<(u32, u32), u64>,
    occurs_in: HashMap<(u32, u32), HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Learner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.symbol_ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.symbol_ids.insert(s.to_string(), id);
        id
    }

    fn push(&mut self, pair: (u32, u32)) {
        let count = self.counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            self.heap.push(Candidate {
                count,
                left: self.symbols[pair.0 as usize].clone(),
                right: self.symbols[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    fn best(&mut self) -> Option<Candidate> {
        while let Some(c) = self.heap.pop() {
            if self.counts.get(&c.pair).copied().unwrap_or(0) == c.count {
                return Some(c);
            }
        }
        None
    }

    fn merge(&mut self, pair: (u32, u32), merged: u32) {
        let mut affected: Vec<usize> = self
            .occurs_in
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut touched = HashSet::new();
        for w in affected {
            let (syms, freq) = &self.words[w];
            let freq = *freq;
            if !syms.windows(2).any(|p| (p[0], p[1]) == pair) {
                continue;
            }
            for p in syms.windows(2) {
                let key = (p[0], p[1]);
                if let Some(c) = self.counts.get_mut(&key) {
                    *c -= freq;
                }
                touched.insert(key);
            }
            let mut next = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(syms[i]);
                    i += 1;
                }
            }
            for p in next.windows(2) {
                let key = (p[0], p[1]);
                *self.counts.entry(key).or_insert(0) += freq;
                self.occurs_in.entry(key).or_default().insert(w);
                touched.insert(key);
            }
            self.words[w].0 = next;
        }
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for key in touched {
            if self.counts.get(&key) == Some(&0) {
                self.counts.remove(&key);
                self.occurs_in.remove(&key);
            } else {
                self.push(key);
            }
        }
    }
}

/// Counts whitespace-separated words across lines.
pub fn word_counts<S: AsRef<str> + Sync>(lines: &[S]) -> BTreeMap<String, u64> {
    lines
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u64>, line| {
            for w in line.as_ref().split_whitespace() {
                *acc.entry(w.to_string()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        })
        .into_iter()
        .collect()
}

pub fn learn_bpe<S: AsRef<str> + Sync>(
    lines: &[S],
    num_merges: usize,
    end_of_word: &str,
) -> Result<BpeModel, BpeError> {
    if end_of_word.is_empty() {
        return Err(BpeError::InvalidModel("empty end-of-word marker".into()));
    }
    let counts = word_counts(lines);
    if counts.is_empty() {
        return Err(BpeError::EmptyCorpus);
    }

    let mut learner = Learner {
        symbols: Vec::new(),
        symbol_ids: HashMap::new(),
        words: Vec::with_capacity(counts.len()),
        counts: HashMap::new(),
        occurs_in: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    let mut alphabet: Vec<String> = Vec::new();
    for (word, freq) in &counts {
        for c in word.chars() {
            alphabet.push(c.to_string());
            alphabet.push(format!("{c}{end_of_word}"));
        }
        let syms: Vec<u32> = initial_symbols(word, end_of_word)
            .iter()
            .map(|s| learner.intern(s))
            .collect();
        learner.words.push((syms, *freq));
    }
    alphabet.sort();
    alphabet.dedup();

    for (w, (syms, freq)) in learner.words.iter().enumerate() {
        for p in syms.windows(2) {
            *learner.counts.entry((p[0], p[1])).or_insert(0) += freq;
            learner.occurs_in.entry((p[0], p[1])).or_default().insert(w);
        }
    }
    let mut initial: Vec<(u32, u32)> = learner.counts.keys().copied().collect();
    initial.sort_unstable();
    for pair in initial {
        learner.push(pair);
    }

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let Some(best) = learner.best() else { break };
        if best.count < 2 {
            break;
        }
        let merged_str = format!("{}{}", best.left, best.right);
        let merged = learner.intern(&merged_str);
        learner.merge(best.pair, merged);
        merges.push((best.left, best.right));
    }

    let mut vocab = alphabet;
    let mut seen: HashSet<String> = vocab.iter().cloned().collect();
    for (l, r) in &merges {
        let t = format!("{l}{r}");
        if seen.insert(t.clone()) {
            vocab.push(t);
        }
    }
    let size = vocab.len();
    BpeModel::from_parts(merges, vocab, Vec::new(), end_of_word.to_string(), size)
}

/// Appends the tokens of `new` missing from `base` (in `new`'s id order) and
/// then `lang_code` as a special token. Base ids and merges are unchanged;
/// new merges follow base merges.
pub fn extend_vocab(base: &BpeModel, new: &BpeModel, lang_code: &str) -> Result<BpeModel, BpeError> {
    if base.end_of_word != new.end_of_word {
        return Err(BpeError::EndOfWordMismatch(
            base.end_of_word.clone(),
            new.end_of_word.clone(),
        ));
    }
    if base.index.contains_key(lang_code) {
        return Err(BpeError::DuplicateSpecial(lang_code.to_string()));
    }
    let mut vocab = base.vocab.clone();
    let mut specials = base.specials.clone();
    for t in &new.vocab {
        if !base.index.contains_key(t) && t != lang_code {
            vocab.push(t.clone());
            if new.is_special(t) {
                specials.push(t.clone());
            }
        }
    }
    vocab.push(lang_code.to_string());
    specials.push(lang_code.to_string());

    let mut merges = base.merges.clone();
    let known: HashSet<&(String, String)> = base.merges.iter().collect();
    merges.extend(new.merges.iter().filter(|m| !known.contains(m)).cloned());

    BpeModel::from_parts(merges, vocab, specials, base.end_of_word.clone(), base.vocab.len())
}
