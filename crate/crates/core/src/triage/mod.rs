//! Video metadata triage: URL harvesting, text preprocessing, the scam/normal
//! text classifier and detection-delay reporting.

mod delay;
mod metrics;
mod model;
mod text;
mod urls;

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use delay::{creator_distribution, detection_delay, DelayRow, DelayTable, CREATOR_BUCKETS};
pub use metrics::{Confusion, EvalMetrics};
pub use model::{
    classify, evaluate, train_classifier, ClassifierModel, Dense, Prediction, TextPipeline,
    TrainOptions, TrainOutput, MODEL_FORMAT,
};
pub use text::{
    normalize_text, preprocess_corpus, tokenize, Feature, PreprocessAudit, PreprocessIssue,
    Preprocessed, TextMapError, TextMaps, TextSample, MIN_TOKENS,
};
pub use urls::{extract_urls, harvest_solidity_urls, UrlCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Scam,
    Normal,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Scam => "scam",
            Label::Normal => "normal",
        })
    }
}

/// One captured video. `label` is only present in annotated corpora.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoRecord {
    pub video_id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub creator_account: String,
    pub created_at: DateTime<Utc>,
    pub captured_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("invalid model: {0}")]
    Model(String),
}

/// Parses newline-delimited video records. Blank lines are skipped and
/// video ids must be unique.
pub fn parse_videos(text: &str, path: &Path) -> Result<Vec<VideoRecord>, TriageError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| TriageError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: VideoRecord = serde_json::from_str(line).map_err(|e| format(e.to_string()))?;
        if !seen.insert(record.video_id.clone()) {
            return Err(format(format!("duplicate video_id `{}`", record.video_id)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_videos(path: &Path) -> Result<Vec<VideoRecord>, TriageError> {
    let text = fs::read_to_string(path).map_err(|source| TriageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_videos(&text, path)
}
