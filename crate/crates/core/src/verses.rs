//! Verse-keyed alignment of scripture translations.
//!
//! Translations sometimes fold several verses into one (`3:4-6`) where
//! another translation keeps them separate. Alignment groups entries whose
//! verse ranges overlap, across all documents, into connected components.
//! A component becomes one parallel unit when every document covers exactly
//! the same verses; merged-side texts are joined by a single space.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use log::warn;
use thiserror::Error;

use crate::corpus::{member_id, CorpusError, ParallelUnit, Sentence};
use crate::lang::{LangTag, Origin, Source};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerseError {
    #[error("bad verse key {0:?}")]
    BadKey(String),
    #[error("verse keys out of order or overlapping: {prev} then {next}")]
    Unordered { prev: String, next: String },
    #[error("need at least two documents")]
    TooFewDocs,
    #[error("line {line_no}: {reason}")]
    Malformed { line_no: usize, reason: String },
}

/// `chapter:first` or the merged form `chapter:first-last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VerseKey {
    pub chapter: u32,
    pub first: u32,
    pub last: u32,
}

impl VerseKey {
    pub fn single(chapter: u32, verse: u32) -> Self {
        VerseKey {
            chapter,
            first: verse,
            last: verse,
        }
    }

    pub fn is_merged(&self) -> bool {
        self.last > self.first
    }

    pub fn verses(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.first..=self.last).map(move |v| (self.chapter, v))
    }

    fn overlaps(&self, other: &VerseKey) -> bool {
        self.chapter == other.chapter && self.first <= other.last && other.first <= self.last
    }
}

impl fmt::Display for VerseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_merged() {
            write!(f, "{}:{}-{}", self.chapter, self.first, self.last)
        } else {
            write!(f, "{}:{}", self.chapter, self.first)
        }
    }
}

impl FromStr for VerseKey {
    type Err = VerseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || VerseError::BadKey(s.to_string());
        let (c, v) = s.split_once(':').ok_or_else(bad)?;
        let chapter: u32 = c.parse().map_err(|_| bad())?;
        let (first, last) = match v.split_once('-') {
            Some((a, b)) => {
                let a: u32 = a.parse().map_err(|_| bad())?;
                let b: u32 = b.parse().map_err(|_| bad())?;
                if a >= b {
                    return Err(bad());
                }
                (a, b)
            }
            None => {
                let a = v.parse().map_err(|_| bad())?;
                (a, a)
            }
        };
        Ok(VerseKey {
            chapter,
            first,
            last,
        })
    }
}

/// One translation of a book, as ordered verse entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerseDoc {
    pub lang: LangTag,
    entries: Vec<(VerseKey, String)>,
}

impl VerseDoc {
    /// Entries must be strictly increasing in (chapter, first verse) and
    /// must not overlap each other.
    pub fn new(lang: LangTag, entries: Vec<(VerseKey, String)>) -> Result<Self, VerseError> {
        for w in entries.windows(2) {
            let (prev, next) = (&w[0].0, &w[1].0);
            let ordered = (prev.chapter, prev.first) < (next.chapter, next.first);
            if !ordered || prev.overlaps(next) {
                return Err(VerseError::Unordered {
                    prev: prev.to_string(),
                    next: next.to_string(),
                });
            }
        }
        Ok(VerseDoc { lang, entries })
    }

    pub fn from_pairs<K: AsRef<str>, T: Into<String>>(
        lang: LangTag,
        pairs: impl IntoIterator<Item = (K, T)>,
    ) -> Result<Self, VerseError> {
        let entries = pairs
            .into_iter()
            .map(|(k, t)| Ok((k.as_ref().parse()?, t.into())))
            .collect::<Result<Vec<_>, VerseError>>()?;
        VerseDoc::new(lang, entries)
    }

    /// Parses `key<TAB>text` lines; blank lines are skipped.
    pub fn parse(lang: LangTag, input: &str) -> Result<Self, VerseError> {
        let mut entries = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, text) = line.split_once('\t').ok_or(VerseError::Malformed {
                line_no: idx + 1,
                reason: "expected `key<TAB>text`".into(),
            })?;
            entries.push((key.trim().parse()?, text.trim().to_string()));
        }
        VerseDoc::new(lang, entries)
    }

    pub fn entries(&self) -> &[(VerseKey, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Verses that appear in only some documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnmatchedVerses {
    /// Keys per language; languages lacking the verses are absent.
    pub keys: Vec<(LangTag, Vec<VerseKey>)>,
}

/// Overlapping keys whose verse unions disagree across documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerseConflict {
    pub keys: Vec<(LangTag, Vec<VerseKey>)>,
}

#[derive(Debug, Clone, Default)]
pub struct VerseAlignment {
    pub units: Vec<ParallelUnit>,
    pub unmatched: Vec<UnmatchedVerses>,
    pub conflicts: Vec<VerseConflict>,
}

/// Aligns two verse documents. See [`align_verse_docs`].
pub fn align_verses(
    a: &VerseDoc,
    b: &VerseDoc,
    source: Source,
    id_prefix: &str,
) -> Result<VerseAlignment, CorpusError> {
    align_verse_docs(&[a, b], source, id_prefix)
}

/// Aligns any number (≥2) of verse documents into parallel units.
///
/// Unit ids are `<id_prefix><chapter>:<first>[-<last>]`; member ids are
/// `<unit id>/<lang>`. Components covered by only some documents are
/// reported in `unmatched`; components whose verse unions differ are
/// reported in `conflicts`. Both are logged and produce no unit.
pub fn align_verse_docs(
    docs: &[&VerseDoc],
    source: Source,
    id_prefix: &str,
) -> Result<VerseAlignment, CorpusError> {
    let mut out = VerseAlignment::default();
    if docs.len() < 2 {
        return Ok(out);
    }
    for component in components(docs) {
        let per_doc: Vec<Vec<usize>> = component;
        let present: Vec<usize> = (0..docs.len()).filter(|&d| !per_doc[d].is_empty()).collect();
        let keyed = |d: usize| -> (LangTag, Vec<VerseKey>) {
            let keys = per_doc[d].iter().map(|&i| docs[d].entries[i].0).collect();
            (docs[d].lang.clone(), keys)
        };
        if present.len() < docs.len() {
            let keys: Vec<_> = present.iter().map(|&d| keyed(d)).collect();
            warn!("unmatched verses: {}", describe(&keys));
            out.unmatched.push(UnmatchedVerses { keys });
            continue;
        }
        let unions: Vec<BTreeSet<(u32, u32)>> = (0..docs.len())
            .map(|d| {
                per_doc[d]
                    .iter()
                    .flat_map(|&i| docs[d].entries[i].0.verses())
                    .collect()
            })
            .collect();
        if unions.iter().any(|u| u != &unions[0]) {
            let keys: Vec<_> = (0..docs.len()).map(keyed).collect();
            warn!("overlapping ranges, unit skipped: {}", describe(&keys));
            out.conflicts.push(VerseConflict { keys });
            continue;
        }
        let (chapter, first) = *unions[0].first().expect("non-empty component");
        let last = unions[0].last().expect("non-empty component").1;
        let span = VerseKey {
            chapter,
            first,
            last,
        };
        let unit_id = format!("{id_prefix}{span}");
        let mut unit = ParallelUnit {
            id: unit_id.clone(),
            source: source.clone(),
            members: Default::default(),
            origin: Default::default(),
        };
        for (d, doc) in docs.iter().enumerate() {
            let text = per_doc[d]
                .iter()
                .map(|&i| doc.entries[i].1.trim())
                .collect::<Vec<_>>()
                .join(" ");
            let sentence = Sentence::new(
                member_id(&unit_id, &doc.lang),
                text,
                doc.lang.clone(),
                source.clone(),
            )?
            .with_verse_ref(span.to_string());
            unit.members.insert(doc.lang.clone(), sentence);
            unit.origin.insert(doc.lang.clone(), Origin::Original);
        }
        unit.validate()?;
        out.units.push(unit);
    }
    Ok(out)
}

fn describe(keys: &[(LangTag, Vec<VerseKey>)]) -> String {
    keys.iter()
        .map(|(l, ks)| {
            let ks: Vec<String> = ks.iter().map(ToString::to_string).collect();
            format!("{l}=[{}]", ks.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Connected components of the overlap graph over all entries of all docs,
/// in verse order. Each component lists entry indices per document.
fn components(docs: &[&VerseDoc]) -> Vec<Vec<Vec<usize>>> {
    // Sweep all entries by (chapter, first); a new component starts when an
    // entry begins after everything seen so far in the current one ends.
    let mut all: Vec<(VerseKey, usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| doc.entries.iter().enumerate().map(move |(i, e)| (e.0, d, i)))
        .collect();
    all.sort_by_key(|(k, d, _)| (k.chapter, k.first, *d));

    let mut out: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut reach: Option<(u32, u32)> = None;
    for (key, d, i) in all {
        let joins = matches!(reach, Some((c, end)) if c == key.chapter && key.first <= end);
        if !joins {
            out.push(vec![Vec::new(); docs.len()]);
            reach = Some((key.chapter, key.last));
        } else if let Some((_, end)) = reach.as_mut() {
            *end = (*end).max(key.last);
        }
        out.last_mut().expect("component pushed")[d].push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(lang: &str, pairs: &[(&str, &str)]) -> VerseDoc {
        VerseDoc::from_pairs(LangTag::new(lang).unwrap(), pairs.iter().copied()).unwrap()
    }

    fn texts(al: &VerseAlignment, lang: &str) -> Vec<String> {
        let l = LangTag::new(lang).unwrap();
        al.units.iter().map(|u| u.text(&l).unwrap().to_string()).collect()
    }

    #[test]
    fn merged_key_on_one_side() {
        let a = doc("lez_Cyrl", &[("1:1", "X"), ("1:2", "Y")]);
        let b = doc("rus_Cyrl", &[("1:1-2", "Z")]);
        let al = align_verses(&a, &b, Source::Bible, "").unwrap();
        assert_eq!(texts(&al, "lez_Cyrl"), ["X Y"]);
        assert_eq!(texts(&al, "rus_Cyrl"), ["Z"]);
        assert_eq!(al.units[0].id, "1:1-2");
    }

    #[test]
    fn identity() {
        let a = doc("lez_Cyrl", &[("1:1", "X")]);
        let b = doc("rus_Cyrl", &[("1:1", "Z")]);
        let al = align_verses(&a, &b, Source::Bible, "gen.").unwrap();
        assert_eq!(al.units.len(), 1);
        assert_eq!(al.units[0].id, "gen.1:1");
        assert_eq!(texts(&al, "lez_Cyrl"), ["X"]);
    }

    #[test]
    fn three_way_merge_other_side() {
        let a = doc("lez_Cyrl", &[("1:1-3", "X")]);
        let b = doc("rus_Cyrl", &[("1:1", "P"), ("1:2", "Q"), ("1:3", "R")]);
        let al = align_verses(&a, &b, Source::Bible, "").unwrap();
        assert_eq!(texts(&al, "lez_Cyrl"), ["X"]);
        assert_eq!(texts(&al, "rus_Cyrl"), ["P Q R"]);
    }

    #[test]
    fn one_sided_verses_reported() {
        let a = doc("lez_Cyrl", &[("1:1", "X"), ("1:2", "Y"), ("2:1", "W")]);
        let b = doc("rus_Cyrl", &[("1:1", "P"), ("2:1", "Q")]);
        let al = align_verses(&a, &b, Source::Bible, "").unwrap();
        assert_eq!(al.units.len(), 2);
        assert_eq!(al.unmatched.len(), 1);
        assert_eq!(al.unmatched[0].keys[0].1, vec![VerseKey::single(1, 2)]);
    }

    #[test]
    fn partial_overlap_is_conflict() {
        let a = doc("lez_Cyrl", &[("1:1-2", "X"), ("1:3", "Y")]);
        let b = doc("rus_Cyrl", &[("1:2-3", "P")]);
        let al = align_verses(&a, &b, Source::Bible, "").unwrap();
        assert!(al.units.is_empty());
        assert_eq!(al.conflicts.len(), 1);
        assert_eq!(al.conflicts[0].keys.len(), 2);
    }

    #[test]
    fn gap_inside_merged_span_is_conflict() {
        let a = doc("lez_Cyrl", &[("1:1-3", "X")]);
        let b = doc("rus_Cyrl", &[("1:1", "P"), ("1:3", "R")]);
        let al = align_verses(&a, &b, Source::Bible, "").unwrap();
        assert!(al.units.is_empty());
        assert_eq!(al.conflicts.len(), 1);
    }

    #[test]
    fn chapters_do_not_bleed() {
        let a = doc("lez_Cyrl", &[("1:5", "X"), ("2:1", "Y")]);
        let b = doc("rus_Cyrl", &[("1:5", "P"), ("2:1", "Q")]);
        let al = align_verses(&a, &b, Source::Bible, "").unwrap();
        assert_eq!(al.units.len(), 2);
    }

    #[test]
    fn three_documents() {
        let a = doc("lez_Cyrl", &[("1:1", "A1"), ("1:2", "A2"), ("1:3", "A3")]);
        let b = doc("rus_Cyrl", &[("1:1-2", "B12"), ("1:3", "B3")]);
        let c = doc("azj_Latn", &[("1:1", "C1"), ("1:2-3", "C23")]);
        let al = align_verse_docs(&[&a, &b, &c], Source::Bible, "").unwrap();
        assert_eq!(al.units.len(), 1);
        assert_eq!(texts(&al, "lez_Cyrl"), ["A1 A2 A3"]);
        assert_eq!(texts(&al, "rus_Cyrl"), ["B12 B3"]);
        assert_eq!(texts(&al, "azj_Latn"), ["C1 C23"]);
    }

    #[test]
    fn key_parsing_and_doc_order() {
        assert_eq!("3:4-6".parse::<VerseKey>().unwrap().to_string(), "3:4-6");
        assert!("3:6-4".parse::<VerseKey>().is_err());
        assert!("3:4-4".parse::<VerseKey>().is_err());
        assert!("x".parse::<VerseKey>().is_err());
        let l = LangTag::new("lez_Cyrl").unwrap();
        assert!(VerseDoc::from_pairs(l.clone(), [("1:2", "a"), ("1:1", "b")]).is_err());
        assert!(VerseDoc::from_pairs(l.clone(), [("1:1-3", "a"), ("1:2", "b")]).is_err());
        assert!(VerseDoc::from_pairs(l, [("1:9", "a"), ("2:1", "b")]).is_ok());
    }

    #[test]
    fn parse_tab_separated() {
        let d = VerseDoc::parse(LangTag::new("lez_Cyrl").unwrap(), "1:1\tX\n\n1:2-3\tY Z\n").unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.entries()[1].0.is_merged());
    }
}
