use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use scamlens_core::deobfuscate::ImportStore;
use scamlens_core::triage::{
    classify, creator_distribution, detection_delay, extract_urls, harvest_solidity_urls, load_videos,
    preprocess_corpus, tokenize, train_classifier, ClassifierModel, EvalMetrics, Label, Prediction, TextMaps,
    TextPipeline, TrainOptions, UrlCheck, VideoRecord,
};

use super::{load_imports, require};
use crate::config::PipelineConfig;
use crate::output::ReportDir;
use crate::ConfigError;

/// Keyword phrases by category, as token sequences.
#[derive(Debug, Clone, Default)]
pub struct Keywords(BTreeMap<String, Vec<(String, Vec<String>)>>);

impl Keywords {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let raw: BTreeMap<String, Vec<String>> =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Keywords(
            raw.into_iter()
                .map(|(cat, list)| {
                    let phrases = list.into_iter().map(|k| {
                        let toks = tokenize(&k.to_lowercase());
                        (k, toks)
                    });
                    (cat, phrases.collect())
                })
                .collect(),
        ))
    }

    /// `category:keyword` for every phrase occurring as whole words.
    pub fn matches(&self, text: &str) -> Vec<String> {
        let tokens = tokenize(&text.to_lowercase());
        let mut out = Vec::new();
        for (cat, phrases) in &self.0 {
            for (label, toks) in phrases {
                if !toks.is_empty() && tokens.windows(toks.len()).any(|w| w == toks.as_slice()) {
                    out.push(format!("{cat}:{label}"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TriagedVideo {
    pub record: VideoRecord,
    pub prediction: Prediction,
    pub urls: Vec<UrlCheck>,
    pub keywords: Vec<String>,
}

pub struct TriageOutcome {
    pub videos: Vec<TriagedVideo>,
    pub trained: Option<Vec<EvalMetrics>>,
    pub metrics: Option<EvalMetrics>,
}

impl TriageOutcome {
    pub fn scam_count(&self) -> usize {
        self.videos.iter().filter(|v| v.prediction.label == Label::Scam).count()
    }

    pub fn summary(&self) -> String {
        let mut s = format!("triage: {} videos, {} classified as scam", self.videos.len(), self.scam_count());
        if let Some(m) = &self.metrics {
            s.push_str(&format!(", accuracy {:.4} on labeled records", frac(m.accuracy.numer(), m.accuracy.denom())));
        }
        s
    }

    /// Distinct URLs with Solidity content from videos classified as scams.
    pub fn scam_solidity_urls(&self) -> Vec<String> {
        let mut urls: Vec<String> = self
            .videos
            .iter()
            .filter(|v| v.prediction.label == Label::Scam)
            .flat_map(|v| v.urls.iter().filter(|u| u.solidity).map(|u| u.url.clone()))
            .collect();
        urls.sort();
        urls.dedup();
        urls
    }

    /// (account, title) of scam videos that link `url`.
    pub fn videos_linking<'a>(&'a self, url: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.videos
            .iter()
            .filter(move |v| v.prediction.label == Label::Scam && v.urls.iter().any(|u| u.url == url))
            .map(|v| (v.record.creator_account.as_str(), v.record.title.as_str()))
    }
}

#[derive(Serialize)]
struct VideoRow<'a> {
    video_id: &'a str,
    creator_account: &'a str,
    predicted: Label,
    score: f64,
    label: Option<Label>,
    urls: String,
    solidity_urls: String,
    keywords: String,
    delay_days: i64,
}

#[derive(Serialize)]
struct UrlRow<'a> {
    video_id: &'a str,
    url: &'a str,
    fetched: bool,
    solidity: bool,
}

#[derive(Serialize)]
struct FoldRow {
    fold: usize,
    tp: u64,
    fp: u64,
    fn_: u64,
    tn: u64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn frac(numer: &u64, denom: &u64) -> f64 {
    *numer as f64 / *denom as f64
}

fn load_maps(cfg: &PipelineConfig) -> Result<TextMaps> {
    TextMaps::load(cfg.emoji.as_deref(), cfg.slang.as_deref()).context("loading emoji/slang maps")
}

fn obtain_model(cfg: &PipelineConfig, out: &mut ReportDir, need: bool) -> Result<(Option<ClassifierModel>, Option<Vec<EvalMetrics>>)> {
    if let Some(path) = &cfg.model {
        let model = ClassifierModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
        return Ok((Some(model), None));
    }
    let Some(path) = &cfg.training else {
        if need {
            return Err(ConfigError("triage needs a model or a training corpus (--model / --training)".into()).into());
        }
        return Ok((None, None));
    };
    let records = load_videos(path).with_context(|| format!("loading training corpus {}", path.display()))?;
    let maps = load_maps(cfg)?;
    let pre = preprocess_corpus(&records, cfg.feature, &maps);
    let opts = TrainOptions {
        folds: cfg.folds,
        epochs: cfg.epochs,
        seed: cfg.seed,
        pipeline: TextPipeline {
            feature: cfg.feature,
            maps,
        },
        ..TrainOptions::default()
    };
    let trained = train_classifier(&pre.samples, &opts).context("training classifier")?;
    out.text("model.json", "model", &trained.model.to_json())?;
    out.table("preprocess_audit", &pre.audit)?;
    let folds: Vec<FoldRow> = trained
        .fold_reports
        .iter()
        .enumerate()
        .map(|(fold, m)| FoldRow {
            fold,
            tp: m.confusion.tp,
            fp: m.confusion.fp,
            fn_: m.confusion.fn_,
            tn: m.confusion.tn,
            accuracy: frac(m.accuracy.numer(), m.accuracy.denom()),
            precision: frac(m.precision.numer(), m.precision.denom()),
            recall: frac(m.recall.numer(), m.recall.denom()),
            f1: frac(m.f1.numer(), m.f1.denom()),
        })
        .collect();
    out.table("folds", &folds)?;
    Ok((Some(trained.model), Some(trained.fold_reports)))
}

pub fn run(cfg: &PipelineConfig) -> Result<TriageOutcome> {
    let path = require(&cfg.videos, "a video metadata file")?;
    let records = load_videos(path).with_context(|| format!("loading {}", path.display()))?;
    let imports = load_imports(cfg)?;
    let keywords = match &cfg.keywords {
        Some(p) => Keywords::load(p)?,
        None => Keywords::default(),
    };
    let mut out = ReportDir::create(&cfg.out_dir, "triage", cfg.format)?;
    let (model, trained) = obtain_model(cfg, &mut out, !records.is_empty())?;
    let outcome = classify_all(records, model.as_ref(), &imports, &keywords, trained);
    write(&outcome, &mut out)?;
    out.finish()?;
    Ok(outcome)
}

fn classify_all(
    records: Vec<VideoRecord>,
    model: Option<&ClassifierModel>,
    imports: &ImportStore,
    keywords: &Keywords,
    trained: Option<Vec<EvalMetrics>>,
) -> TriageOutcome {
    let videos: Vec<TriagedVideo> = records
        .into_par_iter()
        .map(|record| {
            let prediction = classify(model.expect("a model is loaded whenever there are videos"), &record.title, &record.description);
            let text = format!("{}\n{}", record.title, record.description);
            let urls = harvest_solidity_urls(&extract_urls(&text), imports);
            let keywords = keywords.matches(&text);
            TriagedVideo {
                record,
                prediction,
                urls,
                keywords,
            }
        })
        .collect();
    let labeled: Vec<(Label, Label)> = videos
        .iter()
        .filter_map(|v| v.record.label.map(|l| (l, v.prediction.label)))
        .collect();
    let metrics = (!labeled.is_empty()).then(|| EvalMetrics::from_pairs(labeled));
    TriageOutcome {
        videos,
        trained,
        metrics,
    }
}

fn write(outcome: &TriageOutcome, out: &mut ReportDir) -> Result<()> {
    let join = |it: &mut dyn Iterator<Item = &str>| it.collect::<Vec<_>>().join(" ");
    let rows: Vec<VideoRow> = outcome
        .videos
        .iter()
        .map(|v| VideoRow {
            video_id: &v.record.video_id,
            creator_account: &v.record.creator_account,
            predicted: v.prediction.label,
            score: v.prediction.score,
            label: v.record.label,
            urls: join(&mut v.urls.iter().map(|u| u.url.as_str())),
            solidity_urls: join(&mut v.urls.iter().filter(|u| u.solidity).map(|u| u.url.as_str())),
            keywords: v.keywords.join(" "),
            delay_days: (v.record.captured_at - v.record.created_at).num_days(),
        })
        .collect();
    out.table("videos", &rows)?;
    let urls: Vec<UrlRow> = outcome
        .videos
        .iter()
        .flat_map(|v| {
            v.urls.iter().map(move |u| UrlRow {
                video_id: &v.record.video_id,
                url: &u.url,
                fetched: u.fetched,
                solidity: u.solidity,
            })
        })
        .collect();
    out.table("urls", &urls)?;

    let scams: Vec<VideoRecord> = outcome
        .videos
        .iter()
        .filter(|v| v.prediction.label == Label::Scam)
        .map(|v| v.record.clone())
        .collect();
    out.json("detection_delay", &detection_delay(&scams))?;
    out.json("creators", &creator_distribution(&scams))?;
    if let Some(m) = &outcome.metrics {
        out.json("metrics", m)?;
    }
    Ok(())
}
