use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Label, VideoRecord};

/// Records with fewer tokens than this are dropped.
pub const MIN_TOKENS: usize = 3;

const VARIATION_SELECTOR: char = '\u{FE0F}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    TitleOnly,
    DescriptionOnly,
    #[default]
    TitlePlusDescription,
}

impl Feature {
    pub fn select(&self, title: &str, description: &str) -> String {
        match self {
            Feature::TitleOnly => title.to_string(),
            Feature::DescriptionOnly => description.to_string(),
            Feature::TitlePlusDescription => format!("{title}\n{description}"),
        }
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "title" | "title_only" => Ok(Feature::TitleOnly),
            "description" | "description_only" => Ok(Feature::DescriptionOnly),
            "title+description" | "title_plus_description" | "both" => Ok(Feature::TitlePlusDescription),
            other => Err(format!("unknown text feature `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum TextMapError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("slang expansion `{expansion}` contains `{token}`, which is part of a slang phrase")]
    Conflict { expansion: String, token: String },
}

/// Emoji and slang replacement tables.
///
/// Emoji keys are codepoint sequences with variation selectors removed;
/// slang keys and expansions are stored as space-joined token sequences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextMaps {
    emoji: BTreeMap<String, String>,
    slang: BTreeMap<String, String>,
}

fn parse_codepoints(field: &str) -> Option<String> {
    field
        .split_whitespace()
        .map(|cp| {
            let hex = cp.trim_start_matches("U+").trim_start_matches("u+");
            u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
        })
        .collect::<Option<String>>()
        .filter(|s| !s.is_empty())
}

fn tsv_pairs(text: &str) -> impl Iterator<Item = (usize, Result<(&str, &str), TextMapError>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            return None;
        }
        let pair = match line.split_once('\t') {
            Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok((k.trim(), v.trim())),
            _ => Err(TextMapError::BadLine {
                line: line_no,
                message: "expected `key<TAB>replacement`".into(),
            }),
        };
        Some((line_no, pair))
    })
}

impl TextMaps {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds emoji entries from TSV lines `codepoints<TAB>text`, where the
    /// codepoints are hex values separated by spaces (`1F680` or `U+1F680`).
    pub fn add_emoji_tsv(&mut self, text: &str) -> Result<(), TextMapError> {
        for (line, pair) in tsv_pairs(text) {
            let (key, value) = pair?;
            let emoji = parse_codepoints(key).ok_or_else(|| TextMapError::BadLine {
                line,
                message: format!("`{key}` is not a codepoint sequence"),
            })?;
            let emoji: String = emoji.chars().filter(|&c| c != VARIATION_SELECTOR).collect();
            // plain words or spaces as keys would re-match already normalized text
            if emoji.chars().any(char::is_whitespace) || emoji.chars().all(char::is_alphanumeric) {
                return Err(TextMapError::BadLine {
                    line,
                    message: format!("`{key}` must be a symbol sequence"),
                });
            }
            if self.emoji.contains_key(&emoji) {
                return Err(TextMapError::Duplicate { line, key: key.into() });
            }
            self.emoji.insert(emoji, value.to_string());
        }
        Ok(())
    }

    /// Adds slang entries from TSV lines `phrase<TAB>expansion`. Expansions
    /// may not reuse any token that occurs in a slang phrase, which keeps
    /// replacement a single-pass, idempotent rewrite.
    pub fn add_slang_tsv(&mut self, text: &str) -> Result<(), TextMapError> {
        for (line, pair) in tsv_pairs(text) {
            let (key, value) = pair?;
            let phrase = tokenize(&key.to_lowercase()).join(" ");
            let expansion = tokenize(&value.to_lowercase()).join(" ");
            if phrase.is_empty() || expansion.is_empty() {
                return Err(TextMapError::BadLine {
                    line,
                    message: "phrase and expansion need at least one word".into(),
                });
            }
            if self.slang.contains_key(&phrase) {
                return Err(TextMapError::Duplicate { line, key: key.into() });
            }
            self.slang.insert(phrase, expansion);
        }
        let key_tokens: BTreeSet<&str> = self.slang.keys().flat_map(|k| k.split(' ')).collect();
        for expansion in self.slang.values() {
            if let Some(token) = expansion.split(' ').find(|t| key_tokens.contains(t)) {
                return Err(TextMapError::Conflict {
                    expansion: expansion.clone(),
                    token: token.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn load(emoji: Option<&Path>, slang: Option<&Path>) -> Result<Self, TextMapError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| TextMapError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let mut maps = Self::new();
        if let Some(p) = emoji {
            maps.add_emoji_tsv(&read(p)?)?;
        }
        if let Some(p) = slang {
            maps.add_slang_tsv(&read(p)?)?;
        }
        Ok(maps)
    }

    pub fn emoji_len(&self) -> usize {
        self.emoji.len()
    }

    pub fn slang_len(&self) -> usize {
        self.slang.len()
    }

    fn replace_emoji(&self, text: &str) -> String {
        let chars: Vec<char> = text.chars().filter(|&c| c != VARIATION_SELECTOR).collect();
        let longest = self.emoji.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        'outer: while i < chars.len() {
            for len in (1..=longest.min(chars.len() - i)).rev() {
                let candidate: String = chars[i..i + len].iter().collect();
                if let Some(rep) = self.emoji.get(&candidate) {
                    out.push(' ');
                    out.push_str(rep);
                    out.push(' ');
                    i += len;
                    continue 'outer;
                }
            }
            out.push(chars[i]);
            i += 1;
        }
        out
    }

    fn replace_slang(&self, tokens: Vec<String>) -> Vec<String> {
        let longest = self.slang.keys().map(|k| k.split(' ').count()).max().unwrap_or(0);
        if longest == 0 {
            return tokens;
        }
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        'outer: while i < tokens.len() {
            for len in (1..=longest.min(tokens.len() - i)).rev() {
                if let Some(exp) = self.slang.get(&tokens[i..i + len].join(" ")) {
                    out.extend(exp.split(' ').map(str::to_string));
                    i += len;
                    continue 'outer;
                }
            }
            out.push(tokens[i].clone());
            i += 1;
        }
        out
    }
}

/// Splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Emoji replacement, lowercasing, tokenizing, then slang expansion.
pub fn normalize_text(text: &str, maps: &TextMaps) -> Vec<String> {
    let replaced = maps.replace_emoji(text).to_lowercase();
    maps.replace_slang(tokenize(&replaced))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextSample {
    pub tokens: Vec<String>,
    pub label: Option<Label>,
    pub source_video: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessIssue {
    /// Mostly non-ASCII letters; kept as-is since translation is not done.
    NonEnglish,
    TooShort,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreprocessAudit {
    pub video_id: String,
    pub issue: PreprocessIssue,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Preprocessed {
    pub samples: Vec<TextSample>,
    pub audit: Vec<PreprocessAudit>,
}

fn looks_non_english(text: &str) -> bool {
    let (mut letters, mut foreign) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if !c.is_ascii() {
            foreign += 1;
        }
    }
    letters > 0 && foreign * 10 >= letters * 3
}

/// Turns records into token samples, dropping short records and exact
/// token-sequence duplicates (the first occurrence wins).
pub fn preprocess_corpus(records: &[VideoRecord], feature: Feature, maps: &TextMaps) -> Preprocessed {
    let normalized: Vec<(Vec<String>, bool)> = records
        .par_iter()
        .map(|r| {
            let text = feature.select(&r.title, &r.description);
            (normalize_text(&text, maps), looks_non_english(&text))
        })
        .collect();

    let mut out = Preprocessed::default();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    for (record, (tokens, foreign)) in records.iter().zip(normalized) {
        let mut flag = |issue| {
            out.audit.push(PreprocessAudit {
                video_id: record.video_id.clone(),
                issue,
            })
        };
        if foreign {
            flag(PreprocessIssue::NonEnglish);
        }
        if tokens.len() < MIN_TOKENS {
            flag(PreprocessIssue::TooShort);
            continue;
        }
        if !seen.insert(tokens.clone()) {
            flag(PreprocessIssue::Duplicate);
            continue;
        }
        out.samples.push(TextSample {
            tokens,
            label: record.label,
            source_video: record.video_id.clone(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slang_is_longest_match_on_word_boundaries() {
        let mut maps = TextMaps::new();
        maps.add_slang_tsv("gm\tgood morning\ngm fam\tgreetings friends\nu\tyou\n").unwrap();
        assert_eq!(normalize_text("GM fam, u ok? gmx", &maps), ["greetings", "friends", "you", "ok", "gmx"]);
    }

    #[test]
    fn conflicting_slang_is_rejected() {
        let mut maps = TextMaps::new();
        let err = maps.add_slang_tsv("u\tyou\nya\tu there\n").unwrap_err();
        assert!(matches!(err, TextMapError::Conflict { .. }));
    }

    #[test]
    fn variation_selectors_are_ignored() {
        let mut maps = TextMaps::new();
        maps.add_emoji_tsv("U+2764\tred heart\n").unwrap();
        assert_eq!(normalize_text("i\u{2764}\u{FE0F}eth", &maps), ["i", "red", "heart", "eth"]);
    }

    #[test]
    fn non_english_detection() {
        assert!(looks_non_english("Бот для арбитража"));
        assert!(!looks_non_english("Arbitrage bot café"));
    }
}
