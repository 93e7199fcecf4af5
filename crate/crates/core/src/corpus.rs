//! Corpus data model and on-disk formats.
//!
//! JSONL is the canonical format: an optional `header` record carrying the
//! corpus name, then one `unit` (parallel unit) or `mono` (monolingual
//! sentence) record per line. TSV is a lossy interchange format for parallel
//! units only: `id<TAB>source<TAB><lang1>...` with a header row naming the
//! language tags. Member ids, origins and verse references are not carried by
//! TSV; loading assigns `<unit id>/<lang>` ids and `original` origin.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::lang::{LangTag, Origin, Source, TagError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at line {line_no}: {reason}")]
    MalformedRecord { line_no: usize, reason: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("invalid sentence {id:?}: {reason}")]
    InvalidSentence { id: String, reason: String },
    #[error("invalid unit {id:?}: {reason}")]
    InvalidUnit { id: String, reason: String },
    #[error("cannot write as TSV: {0}")]
    Unrepresentable(String),
    #[error(transparent)]
    Tag(#[from] TagError),
}

/// Returns true for Unicode Cc and Cf characters.
pub fn is_control_or_format(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::Control | GeneralCategory::Format
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub lang: LangTag,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verse_ref: Option<String>,
}

impl Sentence {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        lang: LangTag,
        source: Source,
    ) -> Result<Self, CorpusError> {
        let s = Sentence {
            id: id.into(),
            text: text.into(),
            lang,
            source,
            verse_ref: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_verse_ref(mut self, verse_ref: impl Into<String>) -> Self {
        self.verse_ref = Some(verse_ref.into());
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |reason: &str| CorpusError::InvalidSentence {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.is_empty() {
            return Err(fail("empty id"));
        }
        if self.text.trim().is_empty() {
            return Err(fail("empty text"));
        }
        if let Some(c) = self.text.chars().find(|&c| is_control_or_format(c)) {
            return Err(fail(&format!("control/format character U+{:04X}", c as u32)));
        }
        Ok(())
    }
}

/// An aligned tuple of sentences across two or three languages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelUnit {
    pub id: String,
    pub source: Source,
    pub members: BTreeMap<LangTag, Sentence>,
    pub origin: BTreeMap<LangTag, Origin>,
}

impl ParallelUnit {
    /// Builds a unit whose members are all `original`. Member ids are
    /// `<unit id>/<lang>`.
    pub fn from_texts<I, S>(id: &str, source: Source, texts: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (LangTag, S)>,
        S: Into<String>,
    {
        let mut unit = ParallelUnit {
            id: id.to_string(),
            source: source.clone(),
            members: BTreeMap::new(),
            origin: BTreeMap::new(),
        };
        for (lang, text) in texts {
            let sid = member_id(id, &lang);
            let sentence = Sentence::new(sid, text, lang.clone(), source.clone())?;
            unit.members.insert(lang.clone(), sentence);
            unit.origin.insert(lang, Origin::Original);
        }
        unit.validate()?;
        Ok(unit)
    }

    pub fn text(&self, lang: &LangTag) -> Option<&str> {
        self.members.get(lang).map(|s| s.text.as_str())
    }

    pub fn origin_of(&self, lang: &LangTag) -> Option<Origin> {
        self.origin.get(lang).copied()
    }

    pub fn langs(&self) -> impl Iterator<Item = &LangTag> {
        self.members.keys()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |reason: String| CorpusError::InvalidUnit {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(fail("empty id".into()));
        }
        if self.members.len() < 2 {
            return Err(fail(format!("{} member(s), need at least 2", self.members.len())));
        }
        for (lang, s) in &self.members {
            s.validate()?;
            if &s.lang != lang {
                return Err(fail(format!("member keyed {lang} has lang {}", s.lang)));
            }
            if s.source != self.source {
                return Err(fail(format!("member {lang} has source {}", s.source)));
            }
            if !self.origin.contains_key(lang) {
                return Err(fail(format!("no origin for member {lang}")));
            }
        }
        if let Some(extra) = self.origin.keys().find(|l| !self.members.contains_key(*l)) {
            return Err(fail(format!("origin for absent member {extra}")));
        }
        Ok(())
    }
}

pub fn member_id(unit_id: &str, lang: &LangTag) -> String {
    format!("{unit_id}/{lang}")
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub name: String,
    pub units: Vec<ParallelUnit>,
    pub mono: Vec<Sentence>,
}

impl Corpus {
    pub fn new(name: impl Into<String>) -> Self {
        Corpus {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Validates every unit and sentence and checks id uniqueness: unit ids
    /// among units, sentence ids across all members and mono sentences.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut unit_ids = HashSet::new();
        let mut sentence_ids = HashSet::new();
        for u in &self.units {
            u.validate()?;
            if !unit_ids.insert(u.id.as_str()) {
                return Err(CorpusError::DuplicateId(u.id.clone()));
            }
            for s in u.members.values() {
                if !sentence_ids.insert(s.id.as_str()) {
                    return Err(CorpusError::DuplicateId(s.id.clone()));
                }
            }
        }
        for s in &self.mono {
            s.validate()?;
            if !sentence_ids.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        Ok(())
    }

    pub fn unit(&self, id: &str) -> Option<&ParallelUnit> {
        self.units.iter().find(|u| u.id == id)
    }

    /// Every language appearing in any unit, sorted.
    pub fn languages(&self) -> BTreeSet<LangTag> {
        self.units
            .iter()
            .flat_map(|u| u.members.keys().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Tsv,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Format::Tsv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "tsv" => Ok(Format::Tsv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header { name: String },
    Unit(ParallelUnit),
    Mono(Sentence),
}

pub fn load_corpus(path: impl AsRef<Path>, format: Format) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let fallback = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    match format {
        Format::Jsonl => read_jsonl(reader, fallback),
        Format::Tsv => read_tsv(reader, fallback),
    }
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>, format: Format) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        Format::Jsonl => write_jsonl(corpus, &mut w)?,
        Format::Tsv => write_tsv(corpus, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(reader: impl BufRead, default_name: String) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::new(default_name);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                line_no,
                reason: e.to_string(),
            })?;
        let malformed = |e: CorpusError| CorpusError::MalformedRecord {
            line_no,
            reason: e.to_string(),
        };
        match record {
            Record::Header { name } if line_no == 1 => corpus.name = name,
            Record::Header { .. } => {
                return Err(CorpusError::MalformedRecord {
                    line_no,
                    reason: "header record must be the first line".into(),
                })
            }
            Record::Unit(u) => {
                u.validate().map_err(malformed)?;
                corpus.units.push(u);
            }
            Record::Mono(s) => {
                s.validate().map_err(malformed)?;
                corpus.mono.push(s);
            }
        }
    }
    corpus.validate()?;
    Ok(corpus)
}

pub fn write_jsonl(corpus: &Corpus, w: &mut impl Write) -> Result<(), CorpusError> {
    let header = Record::Header {
        name: corpus.name.clone(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("serializable"))?;
    for u in &corpus.units {
        let json = serde_json::to_string(&Record::Unit(u.clone())).expect("serializable");
        writeln!(w, "{json}")?;
    }
    for s in &corpus.mono {
        let json = serde_json::to_string(&Record::Mono(s.clone())).expect("serializable");
        writeln!(w, "{json}")?;
    }
    Ok(())
}

pub fn read_tsv(reader: impl BufRead, name: String) -> Result<Corpus, CorpusError> {
    let mut lines = reader.lines();
    let mut corpus = Corpus::new(name);
    let header = match lines.next() {
        Some(h) => h?,
        None => return Ok(corpus),
    };
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 2 || cols[0] != "id" || cols[1] != "source" {
        return Err(CorpusError::MalformedRecord {
            line_no: 1,
            reason: "header must be `id<TAB>source<TAB><lang>...`".into(),
        });
    }
    let langs = cols[2..]
        .iter()
        .map(|c| LangTag::new(c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CorpusError::MalformedRecord {
            line_no: 1,
            reason: e.to_string(),
        })?;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != langs.len() + 2 {
            return Err(CorpusError::MalformedRecord {
                line_no,
                reason: format!("expected {} fields, found {}", langs.len() + 2, fields.len()),
            });
        }
        let malformed = |e: CorpusError| CorpusError::MalformedRecord {
            line_no,
            reason: e.to_string(),
        };
        let source: Source = fields[1]
            .parse()
            .map_err(|e: TagError| malformed(e.into()))?;
        let texts = langs
            .iter()
            .zip(&fields[2..])
            .filter(|(_, t)| !t.is_empty())
            .map(|(l, t)| (l.clone(), t.to_string()));
        let unit = ParallelUnit::from_texts(fields[0], source, texts).map_err(malformed)?;
        corpus.units.push(unit);
    }
    corpus.validate()?;
    Ok(corpus)
}

pub fn write_tsv(corpus: &Corpus, w: &mut impl Write) -> Result<(), CorpusError> {
    if !corpus.mono.is_empty() {
        return Err(CorpusError::Unrepresentable(
            "monolingual sentences have no TSV form".into(),
        ));
    }
    let langs: Vec<LangTag> = corpus.languages().into_iter().collect();
    write!(w, "id\tsource")?;
    for l in &langs {
        write!(w, "\t{l}")?;
    }
    writeln!(w)?;
    for u in &corpus.units {
        if u.id.contains('\t') || u.id.contains('\n') {
            return Err(CorpusError::Unrepresentable(format!("unit id {:?}", u.id)));
        }
        write!(w, "{}\t{}", u.id, u.source)?;
        for l in &langs {
            let text = u.text(l).unwrap_or("");
            if text.contains('\t') || text.contains('\n') {
                return Err(CorpusError::Unrepresentable(format!(
                    "tab or newline in unit {} ({l})",
                    u.id
                )));
            }
            write!(w, "\t{text}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Unit counts by source and language set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub by_source_langs: BTreeMap<(Source, Vec<LangTag>), usize>,
    pub by_source: BTreeMap<Source, usize>,
    pub total_units: usize,
    pub mono: usize,
}

impl CorpusStats {
    pub fn count(&self, source: &Source) -> usize {
        self.by_source.get(source).copied().unwrap_or(0)
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for u in &corpus.units {
        let langs: Vec<LangTag> = u.members.keys().cloned().collect();
        *stats
            .by_source_langs
            .entry((u.source.clone(), langs))
            .or_insert(0) += 1;
        *stats.by_source.entry(u.source.clone()).or_insert(0) += 1;
        stats.total_units += 1;
    }
    stats.mono = corpus.mono.len();
    stats
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((source, langs), n) in &self.by_source_langs {
            let langs: Vec<&str> = langs.iter().map(LangTag::as_str).collect();
            writeln!(f, "{source}\t{}\t{n}", langs.join(","))?;
        }
        for (source, n) in &self.by_source {
            writeln!(f, "{source}\t*\t{n}")?;
        }
        writeln!(f, "total\t*\t{}", self.total_units)?;
        writeln!(f, "mono\t*\t{}", self.mono)
    }
}
