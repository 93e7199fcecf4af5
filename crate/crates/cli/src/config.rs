//! Flat `key = value` pipeline configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tricorpus::align::{DEFAULT_LOW_CONFIDENCE, DEFAULT_MARGIN_K, DEFAULT_SKIP_PENALTY};
use tricorpus::bpe::{DEFAULT_END_OF_WORD, DEFAULT_NUM_MERGES};
use tricorpus::experiments::{LangTriple, DEFAULT_HOLDOUT, DEFAULT_SEED};
use tricorpus::lang::LangTag;
use tricorpus::textprep::DEFAULT_MIN_WORDS;

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub langs: LangTriple,
    pub seed: u64,
    pub holdout: usize,
    pub skip_penalty: f64,
    pub margin_k: usize,
    pub low_confidence: f64,
    pub min_words: usize,
    pub merges: usize,
    pub end_of_word: String,
    pub metric: String,
    pub abbrev_dir: Option<PathBuf>,
    /// 0 means all available cores.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            langs: LangTriple::default(),
            seed: DEFAULT_SEED,
            holdout: DEFAULT_HOLDOUT,
            skip_penalty: DEFAULT_SKIP_PENALTY,
            margin_k: DEFAULT_MARGIN_K,
            low_confidence: DEFAULT_LOW_CONFIDENCE,
            min_words: DEFAULT_MIN_WORDS,
            merges: DEFAULT_NUM_MERGES,
            end_of_word: DEFAULT_END_OF_WORD.to_string(),
            metric: "both".to_string(),
            abbrev_dir: None,
            threads: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(field, format!("cannot parse {value:?}")))
}

fn parse_tag(field: &str, value: &str) -> Result<LangTag, ConfigError> {
    LangTag::new(value).map_err(|e| bad(field, e.to_string()))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(&format!("line {}", i + 1), "expected `key = value`"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "target" => self.langs.target = parse_tag(key, value)?,
            "pivot" => self.langs.pivot = parse_tag(key, value)?,
            "contact" => self.langs.contact = parse_tag(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "holdout" => self.holdout = parse_num(key, value)?,
            "skip_penalty" => self.skip_penalty = parse_num(key, value)?,
            "margin_k" => self.margin_k = parse_num(key, value)?,
            "low_confidence" => self.low_confidence = parse_num(key, value)?,
            "min_words" => self.min_words = parse_num(key, value)?,
            "merges" => self.merges = parse_num(key, value)?,
            "end_of_word" => self.end_of_word = value.to_string(),
            "metric" => self.metric = value.to_string(),
            "abbrev_dir" => self.abbrev_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            "threads" => self.threads = parse_num(key, value)?,
            other => return Err(bad(other, "unknown key")),
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if !self.skip_penalty.is_finite() || self.skip_penalty < 0.0 {
            return Err(bad("skip_penalty", "must be a finite non-negative number"));
        }
        if self.margin_k == 0 {
            return Err(bad("margin_k", "must be at least 1"));
        }
        if !self.low_confidence.is_finite() {
            return Err(bad("low_confidence", "must be finite"));
        }
        if self.end_of_word.is_empty() {
            return Err(bad("end_of_word", "must not be empty"));
        }
        if !matches!(self.metric.as_str(), "bleu" | "chrfpp" | "both") {
            return Err(bad("metric", "expected bleu, chrfpp or both"));
        }
        Ok(())
    }

    /// Canonical text form, one `key = value` per line in sorted key order.
    pub fn to_text(&self) -> String {
        let abbrev = self
            .abbrev_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let mut lines = vec![
            format!("abbrev_dir = {abbrev}"),
            format!("contact = {}", self.langs.contact),
            format!("end_of_word = {}", self.end_of_word),
            format!("holdout = {}", self.holdout),
            format!("low_confidence = {}", self.low_confidence),
            format!("margin_k = {}", self.margin_k),
            format!("merges = {}", self.merges),
            format!("metric = {}", self.metric),
            format!("min_words = {}", self.min_words),
            format!("pivot = {}", self.langs.pivot),
            format!("seed = {}", self.seed),
            format!("skip_penalty = {}", self.skip_penalty),
            format!("target = {}", self.langs.target),
            format!("threads = {}", self.threads),
        ];
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn lang_list(&self) -> Vec<LangTag> {
        vec![
            self.langs.target.clone(),
            self.langs.pivot.clone(),
            self.langs.contact.clone(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.seed = 7;
        cfg.abbrev_dir = Some("abbr".into());
        let back = PipelineConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(PipelineConfig::default().hash(), cfg.hash());
    }

    #[test]
    fn unknown_key_names_the_field() {
        let err = PipelineConfig::parse("# comment\nseed = 3\nbogus = 1\n").unwrap_err();
        assert_eq!(err.field, "bogus");
        let err = PipelineConfig::parse("seed = many").unwrap_err();
        assert_eq!(err.field, "seed");
        let err = PipelineConfig::parse("metric = rouge").unwrap_err();
        assert_eq!(err.field, "metric");
    }
}
