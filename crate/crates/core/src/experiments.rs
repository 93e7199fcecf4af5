//! Holdout splitting, training-set assembly and LLM batch files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, ParallelUnit};
use crate::lang::{Direction, LangTag, Origin, Script, Source};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_HOLDOUT: usize = 1000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("holdout size {requested} exceeds corpus size {available}")]
    HoldoutTooLarge { requested: usize, available: usize },
    #[error("experiment {0} needs back-translated units")]
    MissingBackTranslation(u8),
    #[error("invalid back-translated unit {id:?}: {reason}")]
    InvalidBackTranslation { id: String, reason: String },
    #[error("unknown experiment {0}; expected 1-4")]
    UnknownExperiment(u8),
    #[error("only {available} holdout sentences for {origin}, {requested} requested")]
    NotEnoughSentences {
        origin: Source,
        requested: usize,
        available: usize,
    },
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error("malformed split file at line {0}")]
    MalformedSplit(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for ExperimentError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => ExperimentError::Io(io),
            other => ExperimentError::MalformedCsv(format!("{other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Holdout,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Holdout => "holdout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    pub assignment: BTreeMap<String, Split>,
    /// Holdout quota per source.
    pub quotas: BTreeMap<Source, usize>,
}

impl SplitAssignment {
    pub fn get(&self, unit_id: &str) -> Option<Split> {
        self.assignment.get(unit_id).copied()
    }

    pub fn is_holdout(&self, unit_id: &str) -> bool {
        self.get(unit_id) == Some(Split::Holdout)
    }

    pub fn holdout_ids(&self) -> BTreeSet<&str> {
        self.assignment
            .iter()
            .filter(|(_, s)| **s == Split::Holdout)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn holdout_len(&self) -> usize {
        self.assignment.values().filter(|s| **s == Split::Holdout).count()
    }

    /// `unit_id<TAB>split` lines in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, s) in &self.assignment {
            out.push_str(id);
            out.push('\t');
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, ExperimentError> {
        let mut a = SplitAssignment::default();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, s) = line
                .split_once('\t')
                .ok_or(ExperimentError::MalformedSplit(i + 1))?;
            let s = match s {
                "train" => Split::Train,
                "holdout" => Split::Holdout,
                _ => return Err(ExperimentError::MalformedSplit(i + 1)),
            };
            a.assignment.insert(id.to_string(), s);
        }
        Ok(a)
    }
}

/// Largest-remainder apportionment of `total` seats by `weights`. Leftover
/// seats go to the largest remainders, ties to the earlier entry.
pub fn largest_remainder(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut quotas: Vec<usize> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let exact = total as u128 * w as u128;
        quotas.push((exact / sum as u128) as usize);
        remainders.push((exact % sum as u128, i));
    }
    let assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(total - assigned) {
        quotas[i] += 1;
    }
    quotas
}

/// Stratified holdout: per-source quotas by largest remainder, then seeded
/// uniform sampling without replacement inside each source.
pub fn stratified_split(
    corpus: &Corpus,
    holdout_size: usize,
    seed: u64,
) -> Result<SplitAssignment, ExperimentError> {
    let total = corpus.units.len();
    if holdout_size > total {
        return Err(ExperimentError::HoldoutTooLarge {
            requested: holdout_size,
            available: total,
        });
    }
    let mut by_source: BTreeMap<&Source, Vec<&str>> = BTreeMap::new();
    for u in &corpus.units {
        by_source.entry(&u.source).or_default().push(u.id.as_str());
    }
    let sources: Vec<&Source> = by_source.keys().copied().collect();
    let weights: Vec<usize> = by_source.values().map(Vec::len).collect();
    let quotas = largest_remainder(&weights, holdout_size);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitAssignment::default();
    for (source, quota) in sources.iter().zip(&quotas) {
        let ids = &by_source[source];
        let chosen: HashSet<usize> = index::sample(&mut rng, ids.len(), *quota).into_iter().collect();
        for (i, id) in ids.iter().enumerate() {
            let s = if chosen.contains(&i) { Split::Holdout } else { Split::Train };
            out.assignment.insert(id.to_string(), s);
        }
        out.quotas.insert((*source).clone(), *quota);
    }
    Ok(out)
}

/// The three languages of the exemplar setup, by role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangTriple {
    /// The low-resource language.
    pub target: LangTag,
    /// The pivot whose Qusar side is back-translated.
    pub pivot: LangTag,
    /// The contact language present in all sources.
    pub contact: LangTag,
}

impl Default for LangTriple {
    fn default() -> Self {
        LangTriple {
            target: LangTag::new("lez_Cyrl").expect("valid tag"),
            pivot: LangTag::new("rus_Cyrl").expect("valid tag"),
            contact: LangTag::new("azj_Latn").expect("valid tag"),
        }
    }
}

/// One training direction and the sources it draws from (`None` = all).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionSpec {
    pub direction: Direction,
    pub sources: Option<BTreeSet<Source>>,
}

impl DirectionSpec {
    fn accepts(&self, s: &Source) -> bool {
        self.sources.as_ref().map_or(true, |set| set.contains(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub id: u8,
    pub directions: Vec<DirectionSpec>,
    pub use_backtranslated: bool,
}

impl ExperimentSpec {
    /// The four training configurations:
    /// 1. target↔contact over all sources;
    /// 2. adds target↔pivot on bible and quran;
    /// 3. adds pivot↔contact on bible and quran;
    /// 4. all six directions over all sources, with back-translated pivot
    ///    text merged into the units that lack it.
    pub fn preset(id: u8, langs: &LangTriple) -> Result<Self, ExperimentError> {
        let religious: BTreeSet<Source> = [Source::Bible, Source::Quran].into_iter().collect();
        let both = |a: &LangTag, b: &LangTag, sources: Option<BTreeSet<Source>>| {
            let fwd = Direction::new(a.clone(), b.clone());
            let bwd = fwd.reversed();
            [
                DirectionSpec {
                    direction: fwd,
                    sources: sources.clone(),
                },
                DirectionSpec {
                    direction: bwd,
                    sources,
                },
            ]
        };
        let LangTriple {
            target,
            pivot,
            contact,
        } = langs;
        let mut directions = Vec::new();
        match id {
            1..=3 => {
                directions.extend(both(target, contact, None));
                if id >= 2 {
                    directions.extend(both(target, pivot, Some(religious.clone())));
                }
                if id >= 3 {
                    directions.extend(both(pivot, contact, Some(religious)));
                }
            }
            4 => {
                directions.extend(both(target, contact, None));
                directions.extend(both(target, pivot, None));
                directions.extend(both(pivot, contact, None));
            }
            other => return Err(ExperimentError::UnknownExperiment(other)),
        }
        Ok(ExperimentSpec {
            id,
            directions,
            use_backtranslated: id == 4,
        })
    }

    pub fn direction_labels(&self) -> Vec<String> {
        self.directions.iter().map(|d| d.direction.label()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrainingRecord {
    pub unit_id: String,
    pub source: Source,
    pub direction: Direction,
    pub src_text: String,
    pub tgt_text: String,
}

/// Checks that every back-translated unit carries a `back_translated` member.
pub fn validate_back_translations(units: &[ParallelUnit]) -> Result<(), ExperimentError> {
    for u in units {
        let fail = |reason: String| ExperimentError::InvalidBackTranslation {
            id: u.id.clone(),
            reason,
        };
        u.validate().map_err(|e| fail(e.to_string()))?;
        if !u.origin.values().any(|o| *o == Origin::BackTranslated) {
            return Err(fail("no back_translated member".into()));
        }
    }
    Ok(())
}

fn usable_for_training<'a>(unit: &'a ParallelUnit, lang: &LangTag) -> Option<&'a str> {
    match unit.origin_of(lang)? {
        Origin::Original | Origin::BackTranslated => unit.text(lang),
        Origin::MtForEval => None,
    }
}

/// Emits training records for train-assigned units only. Units are visited
/// in corpus order and directions in spec order. Back-translated members are
/// merged into matching corpus units (by id) when the spec asks for them;
/// members tagged `mt_for_eval` are never used for training.
pub fn assemble_experiment(
    corpus: &Corpus,
    split: &SplitAssignment,
    spec: &ExperimentSpec,
    back_translated: Option<&[ParallelUnit]>,
) -> Result<Vec<TrainingRecord>, ExperimentError> {
    let bt: HashMap<&str, &ParallelUnit> = if spec.use_backtranslated {
        let units = back_translated.ok_or(ExperimentError::MissingBackTranslation(spec.id))?;
        validate_back_translations(units)?;
        units.iter().map(|u| (u.id.as_str(), u)).collect()
    } else {
        HashMap::new()
    };

    let mut records = Vec::new();
    for unit in &corpus.units {
        if split.get(&unit.id) != Some(Split::Train) {
            continue;
        }
        let merged;
        let unit = match bt.get(unit.id.as_str()) {
            Some(extra) => {
                let mut u = unit.clone();
                for (lang, member) in &extra.members {
                    if extra.origin_of(lang) != Some(Origin::BackTranslated) {
                        continue;
                    }
                    let replace = u.origin_of(lang).map_or(true, |o| o == Origin::MtForEval);
                    if replace {
                        let mut m = member.clone();
                        m.source = u.source.clone();
                        u.members.insert(lang.clone(), m);
                        u.origin.insert(lang.clone(), Origin::BackTranslated);
                    }
                }
                merged = u;
                &merged
            }
            None => unit,
        };
        for d in &spec.directions {
            if !d.accepts(&unit.source) {
                continue;
            }
            let (Some(src), Some(tgt)) = (
                usable_for_training(unit, &d.direction.src),
                usable_for_training(unit, &d.direction.tgt),
            ) else {
                continue;
            };
            records.push(TrainingRecord {
                unit_id: unit.id.clone(),
                source: unit.source.clone(),
                direction: d.direction.clone(),
                src_text: src.to_string(),
                tgt_text: tgt.to_string(),
            });
        }
    }
    Ok(records)
}

/// `src_lang<TAB>tgt_lang<TAB>src_text<TAB>tgt_text` lines.
pub fn write_training_tsv(records: &[TrainingRecord], w: &mut impl Write) -> std::io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.direction.src, r.direction.tgt, r.src_text, r.tgt_text
        )?;
    }
    Ok(())
}

/// The batch prompt with language names filled in.
pub fn llm_prompt(src: &LangTag, tgt: &LangTag) -> String {
    format!(
        "This is a csv file with sentences in {} language. Please translate all of them in {} language",
        src.english_name(),
        tgt.english_name()
    )
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(w)
}

/// Writes the first `n` holdout units of `source` (in id order) that have a
/// `src_lang` member as an `id,text` CSV, and returns the prompt.
pub fn export_llm_batch(
    corpus: &Corpus,
    split: &SplitAssignment,
    source: &Source,
    n: usize,
    src_lang: &LangTag,
    tgt_lang: &LangTag,
    out: &mut impl Write,
) -> Result<String, ExperimentError> {
    let mut rows: Vec<(&str, &str)> = corpus
        .units
        .iter()
        .filter(|u| &u.source == source && split.is_holdout(&u.id))
        .filter_map(|u| u.text(src_lang).map(|t| (u.id.as_str(), t)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(b.0));
    if rows.len() < n {
        return Err(ExperimentError::NotEnoughSentences {
            origin: source.clone(),
            requested: n,
            available: rows.len(),
        });
    }
    let mut w = csv_writer(out);
    w.write_record(["id", "text"])?;
    for (id, text) in rows.into_iter().take(n) {
        w.write_record([id, text])?;
    }
    w.flush()?;
    Ok(llm_prompt(src_lang, tgt_lang))
}

/// How responses are classified as refusals.
#[derive(Debug, Clone)]
pub struct RefusalRules {
    /// A response without any letter of this script is a refusal.
    pub target_script: Script,
    /// Case-insensitive substrings marking a refusal.
    pub patterns: Vec<String>,
}

impl RefusalRules {
    pub fn for_lang(lang: &LangTag) -> Self {
        RefusalRules {
            target_script: lang.script(),
            patterns: Vec::new(),
        }
    }

    pub fn is_refusal(&self, text: &str) -> bool {
        let t = text.trim();
        if t.is_empty() || !t.chars().any(|c| self.target_script.contains(c)) {
            return true;
        }
        let lower = t.to_lowercase();
        self.patterns.iter().any(|p| lower.contains(&p.to_lowercase()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LlmIngest {
    pub translations: BTreeMap<String, String>,
    /// Expected ids without a usable translation, in expected order.
    pub refusals: Vec<String>,
}

/// Parses an `id,text` response CSV. Rows for unexpected ids are ignored.
pub fn ingest_llm_responses(
    input: impl std::io::Read,
    expected_ids: &[String],
    rules: &RefusalRules,
) -> Result<LlmIngest, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(input);
    let mut got: HashMap<String, String> = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            if rec.len() != 2 || &rec[0] != "id" || &rec[1] != "text" {
                return Err(ExperimentError::MalformedCsv("header must be `id,text`".into()));
            }
            continue;
        }
        if rec.len() != 2 {
            return Err(ExperimentError::MalformedCsv(format!("record {} has {} fields", i + 1, rec.len())));
        }
        got.insert(rec[0].to_string(), rec[1].to_string());
    }
    let mut out = LlmIngest::default();
    for id in expected_ids {
        match got.get(id) {
            Some(text) if !rules.is_refusal(text) => {
                out.translations.insert(id.clone(), text.clone());
            }
            _ => out.refusals.push(id.clone()),
        }
    }
    Ok(out)
}

/// Ids of an exported batch file, in file order.
pub fn batch_ids(path: &Path) -> Result<Vec<String>, ExperimentError> {
    let text = fs::read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut ids = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        ids.push(rec.get(0).unwrap_or_default().to_string());
    }
    Ok(ids)
}
