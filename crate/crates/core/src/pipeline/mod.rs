//! From raw or annotated text to co-occurrence records.
//!
//! Each sentence is scanned for measurement mentions; every candidate object in the
//! same sentence (a noun, adjective or verb token, or a contiguous noun phrase) is
//! paired with every mention, together with the token gap between them. Sentences
//! containing a negation word contribute nothing.

mod annotated;
pub(crate) mod records;
mod text;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::scan_measurements;
use crate::units::{Quantity, UnitRegistry};

pub use annotated::{read_annotated, AnnotatedError, AnnotatedReader};
pub use records::{write_record, write_record_header, RecordError, RecordReader};
pub use text::{split_sentences, tokenize};

/// Stopwords shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

pub const DEFAULT_NEGATION_WORDS: [&str; 5] = ["not", "no", "without", "neither", "nor"];

/// Coarse part of speech. `Unknown` marks plain-text input without annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Adj,
    Verb,
    Other,
    Unknown,
}

impl Pos {
    pub fn name(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Adj => "ADJ",
            Pos::Verb => "VERB",
            Pos::Other => "OTHER",
            Pos::Unknown => "UNKNOWN",
        }
    }

    /// Maps a tagger's coarse tag; proper nouns count as nouns.
    pub fn from_coarse_tag(tag: &str) -> Pos {
        match tag.to_ascii_uppercase().as_str() {
            "NOUN" | "PROPN" => Pos::Noun,
            "ADJ" => Pos::Adj,
            "VERB" => Pos::Verb,
            "UNKNOWN" => Pos::Unknown,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown part of speech `{0}`")]
pub struct UnknownPos(pub String);

impl FromStr for Pos {
    type Err = UnknownPos;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "NOUN" => Ok(Pos::Noun),
            "ADJ" => Ok(Pos::Adj),
            "VERB" => Ok(Pos::Verb),
            "OTHER" => Ok(Pos::Other),
            "UNKNOWN" => Ok(Pos::Unknown),
            _ => Err(UnknownPos(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub pos: Pos,
    /// 0-based index of the syntactic head, `None` for the root.
    pub head: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedSentence {
    pub tokens: Vec<AnnotatedToken>,
}

impl AnnotatedSentence {
    /// Wraps plain tokens: every token gets `Pos::Unknown` and no head.
    pub fn plain<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        AnnotatedSentence {
            tokens: tokens
                .into_iter()
                .map(|t| AnnotatedToken {
                    surface: t.into(),
                    pos: Pos::Unknown,
                    head: None,
                })
                .collect(),
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }
}

/// Identifies one row of a distribution table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectKey {
    pub surface: String,
    pub pos: Pos,
    pub head: Option<String>,
}

impl ObjectKey {
    pub fn new(surface: &str, pos: Pos, head: Option<&str>) -> Self {
        ObjectKey {
            surface: surface.to_lowercase(),
            pos,
            head: head.map(str::to_lowercase),
        }
    }

    pub fn without_head(&self) -> Self {
        ObjectKey {
            head: None,
            ..self.clone()
        }
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.surface, self.pos)?;
        if let Some(h) = &self.head {
            write!(f, " (head {h})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceRecord {
    pub object: ObjectKey,
    pub quantity: Quantity,
    pub token_distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("max distance must be within 1..=100, got {0}")]
    Distance(u32),
    #[error("max phrase length must be at least 1")]
    PhraseLen,
    #[error("min phrase count must be at least 1")]
    PhraseCount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionConfig {
    /// `None` pairs everything within the sentence.
    pub max_distance: Option<u32>,
    pub min_phrase_count: u64,
    pub max_phrase_len: usize,
    pub negation_words: BTreeSet<String>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            max_distance: None,
            min_phrase_count: 5,
            max_phrase_len: 3,
            negation_words: DEFAULT_NEGATION_WORDS
                .iter()
                .map(|w| w.to_string())
                .collect(),
        }
    }
}

impl ExtractionConfig {
    pub fn with_max_distance(mut self, max_distance: Option<u32>) -> Self {
        self.max_distance = max_distance;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(k) = self.max_distance {
            if !(1..=100).contains(&k) {
                return Err(ConfigError::Distance(k));
            }
        }
        if self.max_phrase_len == 0 {
            return Err(ConfigError::PhraseLen);
        }
        if self.min_phrase_count == 0 {
            return Err(ConfigError::PhraseCount);
        }
        Ok(())
    }
}

/// Settings that shape a table's content; tables built under different settings
/// cannot be merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildSettings {
    pub registry_version: String,
    pub max_distance: Option<u32>,
    pub max_phrase_len: usize,
    pub min_phrase_count: u64,
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// True iff any token is one of `negation_words`, ignoring case.
pub fn contains_negation<S: AsRef<str>>(tokens: &[S], negation_words: &BTreeSet<String>) -> bool {
    tokens
        .iter()
        .any(|t| negation_words.contains(&t.as_ref().to_lowercase()))
}

/// Tokens between two inclusive spans; 0 when adjacent or overlapping.
pub fn token_gap(a: (usize, usize), b: (usize, usize)) -> u32 {
    let gap = if a.1 < b.0 {
        b.0 - a.1 - 1
    } else if b.1 < a.0 {
        a.0 - b.1 - 1
    } else {
        0
    };
    gap as u32
}

fn word_like(s: &str) -> bool {
    s.chars().any(char::is_alphabetic)
}

/// Pairs objects and measurements sentence by sentence.
#[derive(Debug, Clone)]
pub struct Extractor<'r> {
    registry: &'r UnitRegistry,
    config: ExtractionConfig,
    stopwords: HashSet<String>,
}

impl<'r> Extractor<'r> {
    pub fn new(registry: &'r UnitRegistry, config: ExtractionConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Extractor {
            registry,
            config,
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
        })
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn config(&self) -> &ExtractionConfig {
        &self.config
    }

    pub fn settings(&self) -> BuildSettings {
        BuildSettings {
            registry_version: self.registry.version().to_string(),
            max_distance: self.config.max_distance,
            max_phrase_len: self.config.max_phrase_len,
            min_phrase_count: self.config.min_phrase_count,
        }
    }

    fn candidates(
        &self,
        sentence: &AnnotatedSentence,
        in_mention: &[bool],
    ) -> Vec<(ObjectKey, (usize, usize))> {
        let tokens = &sentence.tokens;
        let eligible = |i: usize| !in_mention[i] && word_like(&tokens[i].surface);
        let mut out = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            if !eligible(i) {
                continue;
            }
            let key = match tok.pos {
                Pos::Unknown => {
                    let lower = tok.surface.to_lowercase();
                    if self.stopwords.contains(&lower) {
                        continue;
                    }
                    ObjectKey {
                        surface: lower,
                        pos: Pos::Unknown,
                        head: None,
                    }
                }
                Pos::Noun | Pos::Adj | Pos::Verb => {
                    let head = tok
                        .head
                        .filter(|&h| tokens[h].pos == Pos::Noun)
                        .map(|h| tokens[h].surface.as_str());
                    ObjectKey::new(&tok.surface, tok.pos, head)
                }
                Pos::Other => continue,
            };
            out.push((key, (i, i)));
        }

        // noun phrases: suffixes of maximal noun runs, headed by the last noun
        let is_noun = |i: usize| eligible(i) && tokens[i].pos == Pos::Noun;
        let mut i = 0;
        while i < tokens.len() {
            if !is_noun(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < tokens.len() && is_noun(i) {
                i += 1;
            }
            let end = i - 1;
            let run = end - start + 1;
            let head = tokens[end].surface.to_lowercase();
            for len in 2..=run.min(self.config.max_phrase_len) {
                let first = end + 1 - len;
                let surface = tokens[first..=end]
                    .iter()
                    .map(|t| t.surface.to_lowercase())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push((
                    ObjectKey {
                        surface,
                        pos: Pos::Noun,
                        head: Some(head.clone()),
                    },
                    (first, end),
                ));
            }
        }
        out
    }

    pub fn extract_records(&self, sentence: &AnnotatedSentence) -> Vec<CooccurrenceRecord> {
        let surfaces = sentence.surfaces();
        if contains_negation(&surfaces, &self.config.negation_words) {
            return Vec::new();
        }
        let mentions = scan_measurements(&surfaces, self.registry);
        if mentions.is_empty() {
            return Vec::new();
        }
        let mut in_mention = vec![false; surfaces.len()];
        for m in &mentions {
            in_mention[m.span.0..=m.span.1].fill(true);
        }
        let candidates = self.candidates(sentence, &in_mention);
        let mut out = Vec::new();
        for m in &mentions {
            for (object, span) in &candidates {
                let token_distance = token_gap(*span, m.span);
                if self.config.max_distance.is_some_and(|k| token_distance > k) {
                    continue;
                }
                out.push(CooccurrenceRecord {
                    object: object.clone(),
                    quantity: m.quantity.clone(),
                    token_distance,
                });
            }
        }
        out
    }

    /// Splits, tokenizes and extracts a plain-text document.
    pub fn extract_text(&self, text: &str) -> Vec<CooccurrenceRecord> {
        split_sentences(text)
            .iter()
            .flat_map(|s| self.extract_records(&AnnotatedSentence::plain(tokenize(s))))
            .collect()
    }
}
