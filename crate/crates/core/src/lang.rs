//! Language tags, source tags and member provenance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TagError {
    #[error("invalid language tag {0:?}: expected `xxx_Scrp` (e.g. lez_Cyrl)")]
    InvalidLangTag(String),
    #[error("invalid origin {0:?}")]
    InvalidOrigin(String),
    #[error("invalid source tag {0:?}")]
    InvalidSource(String),
}

/// A language code of the form `<iso639-3>_<Script>`, e.g. `lez_Cyrl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangTag(String);

impl LangTag {
    pub fn new(code: &str) -> Result<Self, TagError> {
        let b = code.as_bytes();
        let ok = b.len() == 8
            && b[..3].iter().all(u8::is_ascii_lowercase)
            && b[3] == b'_'
            && b[4].is_ascii_uppercase()
            && b[5..].iter().all(u8::is_ascii_lowercase);
        if ok {
            Ok(LangTag(code.to_string()))
        } else {
            Err(TagError::InvalidLangTag(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The ISO 639-3 part, e.g. `lez`.
    pub fn iso(&self) -> &str {
        &self.0[..3]
    }

    /// The script part, e.g. `Cyrl`.
    pub fn script(&self) -> Script {
        Script::from_code(&self.0[4..])
    }

    /// Short label used in report rows: the two-letter code where one exists,
    /// otherwise the ISO 639-3 code (`rus_Cyrl` → `ru`, `lez_Cyrl` → `lez`).
    pub fn short_label(&self) -> &str {
        iso_two_letter(self.iso()).unwrap_or_else(|| self.iso())
    }

    /// English language name for prompts; falls back to the tag itself.
    pub fn english_name(&self) -> &str {
        english_name(self.iso()).unwrap_or(self.as_str())
    }

    /// Whether `label` names this language: the full tag, its ISO code or
    /// its short label.
    pub fn matches_label(&self, label: &str) -> bool {
        label == self.as_str() || label == self.iso() || label == self.short_label()
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LangTag {
    type Err = TagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LangTag::new(s)
    }
}

impl TryFrom<String> for LangTag {
    type Error = TagError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        LangTag::new(&s)
    }
}

impl From<LangTag> for String {
    fn from(t: LangTag) -> String {
        t.0
    }
}

fn iso_two_letter(iso: &str) -> Option<&'static str> {
    Some(match iso {
        "rus" => "ru",
        "azj" | "azb" | "aze" => "az",
        "eng" => "en",
        "tur" => "tr",
        "deu" => "de",
        "fra" => "fr",
        "ukr" => "uk",
        "kaz" => "kk",
        "kat" => "ka",
        "arb" | "ara" => "ar",
        "fas" | "pes" => "fa",
        "hye" => "hy",
        "che" => "ce",
        "ava" => "av",
        "tat" => "tt",
        "bak" => "ba",
        "oss" => "os",
        "spa" => "es",
        _ => return None,
    })
}

fn english_name(iso: &str) -> Option<&'static str> {
    Some(match iso {
        "lez" => "Lezgian",
        "rus" => "Russian",
        "azj" | "azb" | "aze" => "Azerbaijani",
        "eng" => "English",
        "tur" => "Turkish",
        "deu" => "German",
        "fra" => "French",
        "ukr" => "Ukrainian",
        "kaz" => "Kazakh",
        "kat" => "Georgian",
        "arb" | "ara" => "Arabic",
        "fas" | "pes" => "Persian",
        "hye" => "Armenian",
        "che" => "Chechen",
        "ava" => "Avar",
        "tab" => "Tabasaran",
        "dar" => "Dargwa",
        "lbe" => "Lak",
        "tat" => "Tatar",
        "bak" => "Bashkir",
        "oss" => "Ossetian",
        "spa" => "Spanish",
        _ => return None,
    })
}

/// Writing systems with known character ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Script {
    Cyrillic,
    Latin,
    Arabic,
    Greek,
    Georgian,
    Armenian,
    /// Any alphabetic character is accepted.
    Other,
}

impl Script {
    pub fn from_code(code: &str) -> Script {
        match code {
            "Cyrl" => Script::Cyrillic,
            "Latn" => Script::Latin,
            "Arab" => Script::Arabic,
            "Grek" => Script::Greek,
            "Geor" => Script::Georgian,
            "Armn" => Script::Armenian,
            _ => Script::Other,
        }
    }

    pub fn contains(self, c: char) -> bool {
        if !c.is_alphabetic() {
            return false;
        }
        let u = c as u32;
        match self {
            Script::Cyrillic => is_cyrillic(c),
            Script::Latin => {
                c.is_ascii_alphabetic()
                    || (0x00C0..=0x02AF).contains(&u)
                    || (0x1E00..=0x1EFF).contains(&u)
                    || (0x2C60..=0x2C7F).contains(&u)
                    || (0xA720..=0xA7FF).contains(&u)
            }
            Script::Arabic => {
                (0x0600..=0x06FF).contains(&u)
                    || (0x0750..=0x077F).contains(&u)
                    || (0xFB50..=0xFDFF).contains(&u)
                    || (0xFE70..=0xFEFF).contains(&u)
            }
            Script::Greek => (0x0370..=0x03FF).contains(&u) || (0x1F00..=0x1FFF).contains(&u),
            Script::Georgian => (0x10A0..=0x10FF).contains(&u) || (0x1C90..=0x1CBF).contains(&u),
            Script::Armenian => (0x0530..=0x058F).contains(&u),
            Script::Other => true,
        }
    }
}

/// Cyrillic letter test (blocks Cyrillic, Supplement, Extended-A/B/C).
pub fn is_cyrillic(c: char) -> bool {
    let u = c as u32;
    c.is_alphabetic()
        && ((0x0400..=0x052F).contains(&u)
            || (0x1C80..=0x1C8F).contains(&u)
            || (0x2DE0..=0x2DFF).contains(&u)
            || (0xA640..=0xA69F).contains(&u))
}

/// Where a text unit was collected from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Source {
    Bible,
    Quran,
    Qusar,
    Gazet,
    Other(String),
}

impl Source {
    pub fn as_str(&self) -> &str {
        match self {
            Source::Bible => "bible",
            Source::Quran => "quran",
            Source::Qusar => "qusar",
            Source::Gazet => "gazet",
            Source::Other(s) => s,
        }
    }

    /// Column title used in score tables.
    pub fn title(&self) -> String {
        let s = self.as_str();
        let mut chars = s.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = TagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "bible" => Source::Bible,
            "quran" => Source::Quran,
            "qusar" => Source::Qusar,
            "gazet" => Source::Gazet,
            other => {
                let valid = !other.is_empty()
                    && other
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
                if !valid {
                    return Err(TagError::InvalidSource(other.to_string()));
                }
                Source::Other(other.to_string())
            }
        })
    }
}

impl TryFrom<String> for Source {
    type Error = TagError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Source> for String {
    fn from(s: Source) -> String {
        s.as_str().to_string()
    }
}

/// Provenance of one member of a parallel unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    BackTranslated,
    MtForEval,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Original => "original",
            Origin::BackTranslated => "back_translated",
            Origin::MtForEval => "mt_for_eval",
        }
    }
}

impl FromStr for Origin {
    type Err = TagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Origin::Original),
            "back_translated" => Ok(Origin::BackTranslated),
            "mt_for_eval" => Ok(Origin::MtForEval),
            _ => Err(TagError::InvalidOrigin(s.to_string())),
        }
    }
}

/// An ordered translation direction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub src: LangTag,
    pub tgt: LangTag,
}

impl Direction {
    pub fn new(src: LangTag, tgt: LangTag) -> Self {
        Direction { src, tgt }
    }

    pub fn reversed(&self) -> Direction {
        Direction::new(self.tgt.clone(), self.src.clone())
    }

    /// Row label such as `lez-az`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.src.short_label(), self.tgt.short_label())
    }

    /// Resolve `src-tgt` where each side is a full tag, ISO code or short
    /// label of one of `langs`. Full tags are also accepted outside `langs`.
    pub fn parse_with(spec: &str, langs: &[LangTag]) -> Option<Direction> {
        let resolve = |part: &str| -> Option<LangTag> {
            langs
                .iter()
                .find(|l| l.matches_label(part))
                .cloned()
                .or_else(|| LangTag::new(part).ok())
        };
        // Full tags contain '_' but never '-', so splitting on '-' is safe.
        let (a, b) = spec.split_once('-')?;
        Some(Direction::new(resolve(a)?, resolve(b)?))
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lang_tag_validation() {
        for ok in ["lez_Cyrl", "rus_Cyrl", "azj_Latn", "xyz_Abcd"] {
            assert!(LangTag::new(ok).is_ok(), "{ok}");
        }
        for bad in ["lez", "LEZ_Cyrl", "lez_cyrl", "lez-Cyrl", "lez_CYRL", "lezz_Cyrl", "", "лез_Cyrl"] {
            assert!(LangTag::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn labels() {
        let lez = LangTag::new("lez_Cyrl").unwrap();
        let az = LangTag::new("azj_Latn").unwrap();
        let ru = LangTag::new("rus_Cyrl").unwrap();
        assert_eq!(Direction::new(lez.clone(), az.clone()).label(), "lez-az");
        assert_eq!(Direction::new(ru.clone(), lez.clone()).label(), "ru-lez");
        let langs = [lez.clone(), ru.clone(), az.clone()];
        assert_eq!(
            Direction::parse_with("lez-rus", &langs),
            Some(Direction::new(lez.clone(), ru.clone()))
        );
        assert_eq!(
            Direction::parse_with("az-lez_Cyrl", &langs),
            Some(Direction::new(az, lez))
        );
        assert_eq!(Direction::parse_with("xx-yy", &langs), None);
    }

    #[test]
    fn source_roundtrip() {
        for s in ["bible", "quran", "qusar", "gazet", "wiki"] {
            let parsed: Source = s.parse().unwrap();
            assert_eq!(parsed.as_str(), s);
        }
        assert_eq!(Source::Qusar.title(), "Qusar");
        assert!("a b".parse::<Source>().is_err());
    }

    #[test]
    fn scripts() {
        assert!(Script::Cyrillic.contains('ж'));
        assert!(Script::Cyrillic.contains('Ӏ'));
        assert!(!Script::Cyrillic.contains('z'));
        assert!(Script::Latin.contains('ə'));
        assert!(Script::Latin.contains('ş'));
        assert!(!Script::Latin.contains('ж'));
        assert!(!Script::Latin.contains('1'));
    }
}
