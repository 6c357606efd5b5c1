use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classify::ModelConfig;
use crate::corpus::{load_corpus, Corpus, CorpusKind};
use crate::cvt::{SemiSupConfig, ViewSpec};
use crate::embeddings::{load_source, EmbeddingSource};
use crate::error::{Error, Result};

/// One model entry of an experiment; everything that is not a
/// semi-supervised or grid key is a [`ModelConfig`] field.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: String,
    pub model: ModelConfig,
    pub view: Option<ViewSpec>,
    pub unlabeled_batch_ratio: f64,
    pub consensus_weight: f64,
    /// Candidate auxiliary weights selected on validation macro-F1.
    pub alpha_grid: Vec<f64>,
}

impl ModelSpec {
    pub fn supervised(id: &str, model: ModelConfig) -> ModelSpec {
        ModelSpec {
            id: id.to_string(),
            model,
            view: None,
            unlabeled_batch_ratio: 1.0,
            consensus_weight: 1.0,
            alpha_grid: Vec::new(),
        }
    }

    pub fn semisup(id: &str, model: ModelConfig, view: ViewSpec) -> ModelSpec {
        ModelSpec {
            view: Some(view),
            ..ModelSpec::supervised(id, model)
        }
    }

    /// Parses a single model table; `id` defaults to `default_id`.
    pub fn from_toml_str(text: &str, default_id: &str) -> Result<ModelSpec> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        table
            .entry("id")
            .or_insert_with(|| toml::Value::String(default_id.to_string()));
        ModelSpec::from_table(table)
    }

    fn from_table(mut table: toml::Table) -> Result<ModelSpec> {
        let err = |m: String| Error::Config(m);
        let id = match table.remove("id") {
            Some(toml::Value::String(s)) if !s.is_empty() => s,
            Some(v) => return Err(err(format!("model id must be a non-empty string, got {v}"))),
            None => return Err(err("model entry without `id`".into())),
        };
        let ctx = |m: String| Error::Config(format!("model {id}: {m}"));
        if table.contains_key("seed") {
            return Err(ctx(
                "per-model seeds are not allowed; runs derive them from `base_seed`".into(),
            ));
        }
        let float = |table: &mut toml::Table, key: &str, default: f64| -> Result<f64> {
            match table.remove(key) {
                None => Ok(default),
                Some(toml::Value::Float(x)) => Ok(x),
                Some(toml::Value::Integer(i)) => Ok(i as f64),
                Some(v) => Err(ctx(format!("`{key}` must be a number, got {v}"))),
            }
        };
        let word_dropout = float(&mut table, "word_dropout", 0.15)?;
        let unlabeled_batch_ratio = float(&mut table, "unlabeled_batch_ratio", 1.0)?;
        let consensus_weight = float(&mut table, "consensus_weight", 1.0)?;
        let view = match table.remove("cvt") {
            None => None,
            Some(toml::Value::String(s)) => match s.as_str() {
                "none" => None,
                "worddrop" => Some(ViewSpec::WordDrop { rate: word_dropout }),
                other => Some(ViewSpec::parse(other).map_err(|e| ctx(e.to_string()))?),
            },
            Some(v) => return Err(ctx(format!("`cvt` must be a string, got {v}"))),
        };
        let alpha_grid = match table.remove("alpha_grid") {
            None => Vec::new(),
            Some(toml::Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(x),
                    toml::Value::Integer(i) => Ok(i as f64),
                    v => Err(ctx(format!(
                        "`alpha_grid` entries must be numbers, got {v}"
                    ))),
                })
                .collect::<Result<_>>()?,
            Some(v) => return Err(ctx(format!("`alpha_grid` must be an array, got {v}"))),
        };
        let model: ModelConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ctx(e.message().to_string()))?;
        let spec = ModelSpec {
            id,
            model,
            view,
            unlabeled_batch_ratio,
            consensus_weight,
            alpha_grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| Error::Config(format!("model {}: {e}", self.id));
        self.model.validate().map_err(ctx)?;
        if let Some(view) = self.view {
            SemiSupConfig {
                model: self.model.clone(),
                view,
                unlabeled_batch_ratio: self.unlabeled_batch_ratio,
                consensus_weight: self.consensus_weight,
            }
            .validate()
            .map_err(ctx)?;
        }
        if self
            .alpha_grid
            .iter()
            .any(|a| !(a.is_finite() && *a >= 0.0))
        {
            return Err(ctx(Error::Config(
                "alpha_grid entries must be finite and non-negative".into(),
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    labeled: PathBuf,
    unlabeled: Option<PathBuf>,
    #[serde(default = "default_embeddings")]
    embeddings: String,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default = "default_train_ratio")]
    train_ratio: f64,
    #[serde(default = "default_val_fraction")]
    val_fraction: f64,
    #[serde(default)]
    base_seed: u64,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    ratios: Vec<f64>,
    #[serde(default)]
    significance: Vec<(String, String)>,
    models: Vec<toml::Table>,
}

fn default_embeddings() -> String {
    "bow".into()
}
fn default_runs() -> usize {
    10
}
fn default_train_ratio() -> f64 {
    0.9
}
fn default_val_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub labeled: PathBuf,
    pub unlabeled: Option<PathBuf>,
    /// `bow`, `static:<path>` or `ctx:<path>`.
    pub embeddings: String,
    pub runs: usize,
    pub train_ratio: f64,
    pub val_fraction: f64,
    pub base_seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Training ratios for the sweep.
    pub ratios: Vec<f64>,
    /// Model id pairs compared with paired t-tests.
    pub significance: Vec<(String, String)>,
    pub models: Vec<ModelSpec>,
}

impl ExperimentConfig {
    /// Parses TOML; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_relative() { base_dir.join(p) } else { p };
        let embeddings = match raw.embeddings.split_once(':') {
            Some((kind, path)) => format!("{kind}:{}", resolve(PathBuf::from(path)).display()),
            None => raw.embeddings,
        };
        let models = raw
            .models
            .into_iter()
            .map(ModelSpec::from_table)
            .collect::<Result<_>>()?;
        let config = ExperimentConfig {
            labeled: resolve(raw.labeled),
            unlabeled: raw.unlabeled.map(resolve),
            embeddings,
            runs: raw.runs,
            train_ratio: raw.train_ratio,
            val_fraction: raw.val_fraction,
            base_seed: raw.base_seed,
            output_dir: raw.output_dir.map(resolve),
            ratios: raw.ratios,
            significance: raw.significance,
            models,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::from_toml_str(&text, base)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return bad(format!("train_ratio {} outside (0, 1)", self.train_ratio));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad(format!("val_fraction {} outside (0, 1)", self.val_fraction));
        }
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        let mut ids = HashSet::new();
        for m in &self.models {
            m.validate()?;
            if !ids.insert(m.id.as_str()) {
                return bad(format!("duplicate model id {:?}", m.id));
            }
        }
        for (a, b) in &self.significance {
            for id in [a, b] {
                if !ids.contains(id.as_str()) {
                    return bad(format!("significance pair names unknown model {id:?}"));
                }
            }
            if a == b {
                return bad(format!("significance pair compares {a:?} with itself"));
            }
        }
        Ok(())
    }
}

/// Corpora and embeddings shared by every run.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub labeled: Corpus,
    pub unlabeled: Corpus,
    pub source: EmbeddingSource,
}

impl ExperimentData {
    pub fn load(config: &ExperimentConfig) -> Result<ExperimentData> {
        let labeled = load_corpus(&config.labeled, CorpusKind::Labeled)?;
        let unlabeled = match &config.unlabeled {
            Some(p) => load_corpus(p, CorpusKind::Unlabeled)?,
            None => Corpus::empty(CorpusKind::Unlabeled),
        };
        let needs_unlabeled = config
            .models
            .iter()
            .any(|m| m.view.is_some() && m.consensus_weight > 0.0);
        let corpora: Vec<&Corpus> = if needs_unlabeled {
            vec![&labeled, &unlabeled]
        } else {
            vec![&labeled]
        };
        let source = load_source(&config.embeddings, &corpora)?;
        Ok(ExperimentData {
            labeled,
            unlabeled,
            source,
        })
    }
}
