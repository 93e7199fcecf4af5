//! Text cleaning and rule-based sentence segmentation.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use encoding_rs::{Encoding, WINDOWS_1252};
use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::is_control_or_format;
use crate::lang::{is_cyrillic, LangTag};

/// Minimum Cyrillic-ratio gain a repair must achieve to be accepted.
pub const MOJIBAKE_MIN_GAIN: f64 = 0.2;

/// Default minimum number of whitespace tokens for a monolingual sentence.
pub const DEFAULT_MIN_WORDS: usize = 3;

pub const PALOCHKA: char = '\u{04C0}';

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CleanReport {
    pub input_chars: usize,
    pub removed_nonprintable: usize,
    pub encoding_fixes: usize,
    pub palochka_normalizations: usize,
}

impl CleanReport {
    pub fn merge(&mut self, other: &CleanReport) {
        self.input_chars += other.input_chars;
        self.removed_nonprintable += other.removed_nonprintable;
        self.encoding_fixes += other.encoding_fixes;
        self.palochka_normalizations += other.palochka_normalizations;
    }
}

fn cyrillic_stats(text: &str) -> (usize, usize) {
    let mut cyr = 0;
    let mut letters = 0;
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_cyrillic(c) {
            cyr += 1;
        }
    }
    (cyr, letters)
}

fn ratio((cyr, letters): (usize, usize)) -> f64 {
    if letters == 0 {
        0.0
    } else {
        cyr as f64 / letters as f64
    }
}

/// Undo one round of "UTF-8 bytes decoded as a single-byte code page".
fn reinterpret(line: &str, codepage: Option<&'static Encoding>) -> Option<String> {
    let bytes: Vec<u8> = match codepage {
        // ISO-8859-1: code points map straight to bytes.
        None => line
            .chars()
            .map(|c| u8::try_from(c as u32).ok())
            .collect::<Option<Vec<u8>>>()?,
        Some(enc) => {
            let (bytes, _, had_errors) = enc.encode(line);
            if had_errors {
                return None;
            }
            bytes.into_owned()
        }
    };
    String::from_utf8(bytes).ok()
}

fn repair_line(line: &str) -> Option<String> {
    if line.is_ascii() {
        return None;
    }
    let before = cyrillic_stats(line);
    let mut best: Option<(f64, String)> = None;
    for codepage in [None, Some(WINDOWS_1252)] {
        let Some(candidate) = reinterpret(line, codepage) else {
            continue;
        };
        let after = cyrillic_stats(&candidate);
        let gain = ratio(after) - ratio(before);
        if after.0 > before.0 && gain > MOJIBAKE_MIN_GAIN {
            if best.as_ref().map_or(true, |(g, _)| gain > *g) {
                best = Some((gain, candidate));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Repairs Cyrillic mojibake line by line. Returns the text and the number of
/// repaired lines; lines that do not gain enough Cyrillic are left as is.
pub fn fix_encoding(text: &str) -> (String, usize) {
    let mut fixes = 0;
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match repair_line(line) {
            Some(fixed) => {
                fixes += 1;
                out.push_str(&fixed);
            }
            None => out.push_str(line),
        }
    }
    (out, fixes)
}

fn is_cyrillic_vowel(c: char) -> bool {
    matches!(
        c,
        'а' | 'е' | 'ё' | 'и' | 'о' | 'у' | 'ы' | 'э' | 'ю' | 'я' | 'А' | 'Е' | 'Ё' | 'И' | 'О' | 'У'
            | 'Ы' | 'Э' | 'Ю' | 'Я'
    )
}

fn is_palochka_lookalike(c: char) -> bool {
    matches!(c, 'I' | 'l' | '1' | '\u{04CF}')
}

fn normalize_palochka(text: &str) -> (String, usize) {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let replace = is_palochka_lookalike(c)
            && i > 0
            && is_cyrillic(chars[i - 1])
            && match chars.get(i + 1) {
                None => true,
                Some(&next) => is_cyrillic_vowel(next) || !next.is_alphanumeric(),
            };
        if replace {
            out.push(PALOCHKA);
            count += 1;
        } else {
            out.push(c);
        }
    }
    (out, count)
}

/// Strips control/format characters (keeping LF and TAB), applies NFC,
/// collapses runs of spaces and tabs to one space, and maps palochka
/// look-alikes after a Cyrillic letter to U+04C0.
pub fn normalize(text: &str) -> (String, CleanReport) {
    let mut report = CleanReport {
        input_chars: text.chars().count(),
        ..Default::default()
    };
    let stripped: String = text
        .chars()
        .filter(|&c| {
            let drop = (is_control_or_format(c) && c != '\n' && c != '\t')
                || matches!(c, '\u{00AD}' | '\u{200B}'..='\u{200D}' | '\u{2060}' | '\u{FEFF}');
            if drop {
                report.removed_nonprintable += 1;
            }
            !drop
        })
        .collect();
    let composed: String = stripped.nfc().collect();
    let mut collapsed = String::with_capacity(composed.len());
    let mut in_blank = false;
    for c in composed.chars() {
        if c == ' ' || c == '\t' {
            if !in_blank {
                collapsed.push(' ');
            }
            in_blank = true;
        } else {
            collapsed.push(c);
            in_blank = false;
        }
    }
    let (out, n) = normalize_palochka(&collapsed);
    report.palochka_normalizations = n;
    (out, report)
}

/// Encoding repair followed by [`normalize`].
pub fn clean(text: &str) -> (String, CleanReport) {
    let (fixed, fixes) = fix_encoding(text);
    let (out, mut report) = normalize(&fixed);
    report.input_chars = text.chars().count();
    report.encoding_fixes = fixes;
    (out, report)
}

/// Per-language abbreviation lists guarding sentence splits.
#[derive(Debug, Clone, Default)]
pub struct Abbreviations {
    lists: BTreeMap<LangTag, HashSet<String>>,
}

const DEFAULT_RUS: &str = include_str!("../data/abbrev/rus_Cyrl.txt");
const DEFAULT_AZJ: &str = include_str!("../data/abbrev/azj_Latn.txt");

impl Abbreviations {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The shipped lists: Russian (`г.`, `т.е.`, initials `А.`–`Я.`) and
    /// Azerbaijani (`s.`, `b.`).
    pub fn defaults() -> Self {
        let mut a = Self::empty();
        a.add_list(LangTag::new("rus_Cyrl").expect("valid tag"), DEFAULT_RUS);
        a.add_list(LangTag::new("azj_Latn").expect("valid tag"), DEFAULT_AZJ);
        a
    }

    /// Adds one-entry-per-line content to the list for `lang`.
    pub fn add_list(&mut self, lang: LangTag, content: &str) {
        let set = self.lists.entry(lang).or_default();
        set.extend(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        );
    }

    /// Defaults plus every `<LangTag>.txt` file found in `dir`.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut a = Self::defaults();
        let mut files: Vec<_> = fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("txt"))
            .collect();
        files.sort();
        for path in files {
            let Some(lang) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| LangTag::new(s).ok())
            else {
                continue;
            };
            a.add_list(lang, &fs::read_to_string(&path)?);
        }
        Ok(a)
    }

    pub fn contains(&self, lang: &LangTag, token: &str) -> bool {
        self.lists.get(lang).is_some_and(|s| s.contains(token))
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closing(c: char) -> bool {
    matches!(c, '»' | '"' | '”' | '’' | '\'' | ')' | ']')
}

fn is_opening_quote(c: char) -> bool {
    matches!(c, '«' | '"' | '„' | '“' | '‘' | '\'' | '‚')
}

/// Byte ranges of sentences in `text`, trimmed of surrounding whitespace.
pub fn sentence_spans(text: &str, lang: &LangTag, abbrevs: &Abbreviations) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < n {
        if !is_terminal(chars[i].1) {
            i += 1;
            continue;
        }
        let punct_start = i;
        while i < n && is_terminal(chars[i].1) {
            i += 1;
        }
        let punct_end = i;
        while i < n && is_closing(chars[i].1) {
            i += 1;
        }
        let sentence_end = i;
        let mut j = i;
        while j < n && chars[j].1.is_whitespace() {
            j += 1;
        }
        if j == i || j == n {
            continue;
        }
        let next = chars[j].1;
        if !(next.is_uppercase() || next.is_ascii_digit() || next.is_numeric() || is_opening_quote(next)) {
            continue;
        }
        if punct_end - punct_start == 1 && chars[punct_start].1 == '.' {
            let mut w = punct_start;
            while w > 0 && !chars[w - 1].1.is_whitespace() {
                w -= 1;
            }
            let token = &text[byte_at(w)..byte_at(punct_end)];
            if abbrevs.contains(lang, token) {
                continue;
            }
        }
        spans.push((start, sentence_end));
        start = j;
        i = j;
    }
    spans.push((start, n));
    spans
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[byte_at(s)..byte_at(e)];
            let lead = slice.len() - slice.trim_start().len();
            let trimmed = slice.trim();
            if trimmed.is_empty() {
                None
            } else {
                let b = byte_at(s) + lead;
                Some((b, b + trimmed.len()))
            }
        })
        .collect()
}

pub fn split_sentences(text: &str, lang: &LangTag, abbrevs: &Abbreviations) -> Vec<String> {
    sentence_spans(text, lang, abbrevs)
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect()
}

/// Keeps sentences with at least `min_words` whitespace tokens.
pub fn filter_min_words(sentences: Vec<String>, min_words: usize) -> Vec<String> {
    sentences
        .into_iter()
        .filter(|s| s.split_whitespace().count() >= min_words)
        .collect()
}

/// Sentence counts after each stage of the monolingual pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    pub split: usize,
    pub after_min_words: usize,
    pub after_dedup: usize,
}

/// Clean → split → length filter → exact dedup (first occurrence kept).
pub fn monolingual_pipeline(
    documents: &[String],
    lang: &LangTag,
    abbrevs: &Abbreviations,
    min_words: usize,
) -> (Vec<String>, CleanReport, StageCounts) {
    let mut report = CleanReport::default();
    let mut counts = StageCounts::default();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for doc in documents {
        let (text, r) = clean(doc);
        report.merge(&r);
        let sentences: Vec<String> = text
            .split("\n\n")
            .flat_map(|para| split_sentences(&para.replace('\n', " "), lang, abbrevs))
            .collect();
        counts.split += sentences.len();
        let kept = filter_min_words(sentences, min_words);
        counts.after_min_words += kept.len();
        for s in kept {
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
    }
    counts.after_dedup = out.len();
    (out, report, counts)
}
