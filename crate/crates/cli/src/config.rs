//! Pipeline configuration: one TOML file, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use scamlens_core::similarity::Thresholds;
use scamlens_core::triage::Feature;
use scamlens_core::victims::{count_distribution, Bucket, DEFAULT_SCAM_BUCKETS, DEFAULT_VICTIM_BUCKETS};

use crate::{ConfigError, Format};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    out_dir: Option<PathBuf>,
    format: Option<Format>,
    #[serde(default)]
    paths: RawPaths,
    #[serde(default)]
    similarity: RawSimilarity,
    #[serde(default)]
    buckets: RawBuckets,
    period: Option<RawPeriod>,
    #[serde(default)]
    classifier: RawClassifier,
    #[serde(default)]
    cluster: RawCluster,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    contracts: Option<PathBuf>,
    imports: Option<PathBuf>,
    #[serde(default)]
    chains: Vec<PathBuf>,
    prices: Option<PathBuf>,
    videos: Option<PathBuf>,
    training: Option<PathBuf>,
    model: Option<PathBuf>,
    emoji: Option<PathBuf>,
    slang: Option<PathBuf>,
    keywords: Option<PathBuf>,
    seeds: Option<PathBuf>,
    scam_addresses: Option<PathBuf>,
    profiles: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimilarity {
    high: Option<f64>,
    medium: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuckets {
    victim_tx: Option<Vec<Vec<u64>>>,
    scam_tx: Option<Vec<Vec<u64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPeriod {
    from: NaiveDate,
    to: NaiveDate,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassifier {
    feature: Option<String>,
    folds: Option<usize>,
    epochs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCluster {
    top_k: Option<usize>,
}

/// Fully resolved configuration. Relative paths in the file are resolved
/// against the file's directory; flag paths against the working directory.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub contracts: Option<PathBuf>,
    pub imports: Option<PathBuf>,
    pub chains: Vec<PathBuf>,
    pub prices: Option<PathBuf>,
    pub videos: Option<PathBuf>,
    pub training: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub emoji: Option<PathBuf>,
    pub slang: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub scam_addresses: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub victim_buckets: Vec<Bucket>,
    pub scam_buckets: Vec<Bucket>,
    pub period: Option<(NaiveDate, NaiveDate)>,
    pub feature: Feature,
    pub folds: usize,
    pub epochs: usize,
    pub top_k: usize,
}

/// Values given on the command line; `Some` wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub contracts: Option<PathBuf>,
    pub imports: Option<PathBuf>,
    pub chains: Vec<PathBuf>,
    pub prices: Option<PathBuf>,
    pub videos: Option<PathBuf>,
    pub training: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub scam_addresses: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
}

fn err(message: impl Into<String>) -> ConfigError {
    ConfigError(message.into())
}

fn buckets(raw: Option<Vec<Vec<u64>>>, default: &[Bucket], name: &str) -> Result<Vec<Bucket>, ConfigError> {
    let Some(raw) = raw else {
        return Ok(default.to_vec());
    };
    let list = raw
        .iter()
        .map(|b| match b.as_slice() {
            [lo] => Ok(Bucket::new(*lo, None)),
            [lo, hi] => Ok(Bucket::new(*lo, Some(*hi))),
            _ => Err(err(format!("buckets.{name}: each bucket is [lo, hi] or [lo]"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    count_distribution(std::iter::empty(), &list).map_err(|e| err(format!("buckets.{name}: {e}")))?;
    Ok(list)
}

fn to_bps(x: f64, name: &str) -> Result<u64, ConfigError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(err(format!("similarity.{name} must be within [0, 1], got {x}")));
    }
    Ok((x * 10_000.0).round() as u64)
}

impl PipelineConfig {
    pub fn load(file: Option<&Path>, over: Overrides) -> Result<Self, ConfigError> {
        let (raw, base) = match file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
                let raw: RawConfig =
                    toml::from_str(&text).map_err(|e| err(format!("{}: {e}", path.display())))?;
                (raw, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RawConfig::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| base.join(p));

        let high = raw.similarity.high.unwrap_or(0.95);
        let medium = raw.similarity.medium.unwrap_or(0.80);
        let thresholds = Thresholds::new(to_bps(high, "high")?, to_bps(medium, "medium")?)
            .ok_or_else(|| err(format!("similarity.medium ({medium}) must be below similarity.high ({high})")))?;

        let period = match raw.period {
            Some(p) if p.from > p.to => return Err(err("period.from is after period.to")),
            Some(p) => Some((p.from, p.to)),
            None => None,
        };
        let feature = match raw.classifier.feature {
            Some(f) => f.parse().map_err(err)?,
            None => Feature::TitlePlusDescription,
        };
        let folds = raw.classifier.folds.unwrap_or(5);
        if folds < 2 {
            return Err(err("classifier.folds must be at least 2"));
        }

        let paths = raw.paths;
        let chains = if over.chains.is_empty() {
            paths.chains.into_iter().map(|p| base.join(p)).collect()
        } else {
            over.chains
        };
        let cfg = PipelineConfig {
            seed: over.seed.or(raw.seed).unwrap_or(0),
            jobs: over.jobs.or(raw.jobs),
            out_dir: over.out_dir.or(rel(raw.out_dir)).unwrap_or_else(|| PathBuf::from("scamlens-out")),
            format: over.format.or(raw.format).unwrap_or(Format::Json),
            contracts: over.contracts.or(rel(paths.contracts)),
            imports: over.imports.or(rel(paths.imports)),
            chains,
            prices: over.prices.or(rel(paths.prices)),
            videos: over.videos.or(rel(paths.videos)),
            training: over.training.or(rel(paths.training)),
            model: over.model.or(rel(paths.model)),
            emoji: rel(paths.emoji),
            slang: rel(paths.slang),
            keywords: rel(paths.keywords),
            seeds: over.seeds.or(rel(paths.seeds)),
            scam_addresses: over.scam_addresses.or(rel(paths.scam_addresses)),
            profiles: over.profiles.or(rel(paths.profiles)),
            thresholds,
            victim_buckets: buckets(raw.buckets.victim_tx, DEFAULT_VICTIM_BUCKETS, "victim_tx")?,
            scam_buckets: buckets(raw.buckets.scam_tx, DEFAULT_SCAM_BUCKETS, "scam_tx")?,
            period,
            feature,
            folds,
            epochs: raw.classifier.epochs.unwrap_or(100),
            top_k: raw.cluster.top_k.unwrap_or(10),
        };
        if cfg.jobs == Some(0) {
            return Err(err("jobs must be at least 1"));
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn check_paths(&self) -> Result<(), ConfigError> {
        let named = [
            ("contracts", &self.contracts),
            ("imports", &self.imports),
            ("prices", &self.prices),
            ("videos", &self.videos),
            ("training", &self.training),
            ("model", &self.model),
            ("emoji", &self.emoji),
            ("slang", &self.slang),
            ("keywords", &self.keywords),
            ("seeds", &self.seeds),
            ("scam_addresses", &self.scam_addresses),
            ("profiles", &self.profiles),
        ];
        for (name, path) in named {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(err(format!("{name} path {} does not exist", p.display())));
                }
            }
        }
        for p in &self.chains {
            if !p.exists() {
                return Err(err(format!("chain fixture {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<PipelineConfig, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, text).unwrap();
        PipelineConfig::load(Some(&path), Overrides::default())
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert!(load("[similarity]\nhigh = 0.8\nmedium = 0.9\n").is_err());
        assert!(load("[similarity]\nhigh = 1.2\n").is_err());
        let cfg = load("[similarity]\nhigh = 0.9\nmedium = 0.7\n").unwrap();
        assert_eq!((cfg.thresholds.high_bps, cfg.thresholds.medium_bps), (9_000, 7_000));
    }

    #[test]
    fn missing_paths_and_unknown_keys_are_rejected() {
        assert!(load("[paths]\nvideos = \"nope.jsonl\"\n").is_err());
        assert!(load("colour = 1\n").is_err());
        assert!(load("[buckets]\nvictim_tx = [[1, 1], [3]]\n").is_err());
    }

    #[test]
    fn flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "seed = 3\nout_dir = \"o\"\n").unwrap();
        let over = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = PipelineConfig::load(Some(&path), over).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.out_dir, dir.path().join("o"));
    }
}
