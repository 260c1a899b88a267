//! Declarative experiment runner.
//!
//! An experiment is a grid of cells `(method, train_size, n_aug, seed)`.
//! Each cell splits the dataset, builds the `(n_aug + 1)×` training set with
//! the method's text augmenter (the identity augmenter for the control and
//! mixup-only arms), vectorizes, trains and records the epoch log. Cells are
//! independent; finished cells are checkpointed so an interrupted run resumes
//! where it stopped.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{
    make_identity_augmenter, AugmentConfig, Augmenter, EmbeddingAugmenter, HttpBackend, HttpBackendConfig, MockBackend,
    RetryPolicy, RttAugmenter, SynonymAugmenter, TranslationBackend,
};
use crate::corpus::{build_augmented, load_csv, split, ColumnRef, ColumnSpec, CorpusError, Dataset, SplitSpec};
use crate::embeddings::{load_auto, EmbeddingError, EmbeddingModel};
use crate::learn::{train, LearnError, ModelKind, TrainConfig, TrainLog};
use crate::synth::{self, CorpusSpec, EmbeddingSpec};
use crate::vectorize::{embed_dataset, tfidf_fit, tfidf_transform, MixupConfig, VectorizeError};
use crate::wordnet::{parse_wndb, SynonymLexicon, WordNetError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("missing resource: {0}")]
    ResourceMissing(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{0} holds checkpoints from a different config")]
    ConfigChanged(PathBuf),
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    WordNet(#[from] WordNetError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Training arm. Text augmentation and mixup combine freely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    None,
    Synonym,
    Embedding,
    Rtt,
    Mixup,
    SynonymMixup,
    EmbeddingMixup,
    RttMixup,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::None,
        Method::Synonym,
        Method::Embedding,
        Method::Rtt,
        Method::Mixup,
        Method::SynonymMixup,
        Method::EmbeddingMixup,
        Method::RttMixup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Synonym => "synonym",
            Method::Embedding => "embedding",
            Method::Rtt => "rtt",
            Method::Mixup => "mixup",
            Method::SynonymMixup => "synonym+mixup",
            Method::EmbeddingMixup => "embedding+mixup",
            Method::RttMixup => "rtt+mixup",
        }
    }

    pub fn uses_mixup(self) -> bool {
        matches!(self, Method::Mixup | Method::SynonymMixup | Method::EmbeddingMixup | Method::RttMixup)
    }

    /// The text-level part of the arm.
    pub fn text_method(self) -> TextMethod {
        match self {
            Method::None | Method::Mixup => TextMethod::Identity,
            Method::Synonym | Method::SynonymMixup => TextMethod::Synonym,
            Method::Embedding | Method::EmbeddingMixup => TextMethod::Embedding,
            Method::Rtt | Method::RttMixup => TextMethod::Rtt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TextMethod {
    Identity,
    Synonym,
    Embedding,
    Rtt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().to_ascii_lowercase().replace(' ', "");
        Method::ALL.into_iter().find(|m| m.as_str() == norm).ok_or_else(|| {
            let valid: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown method {s:?}; valid methods: {}", valid.join(", "))
        })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticPreset {
    News,
    Sentiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Csv {
        path: PathBuf,
        text: ColumnRef,
        label: ColumnRef,
        #[serde(default = "yes")]
        has_header: bool,
        #[serde(default)]
        label_order: Option<Vec<String>>,
    },
    /// Generated from the lexicon; see [`crate::synth`].
    Synthetic {
        preset: SyntheticPreset,
        n_docs: usize,
        #[serde(default = "default_data_seed")]
        seed: u64,
        #[serde(default = "default_dim")]
        embedding_dim: usize,
    },
}

fn yes() -> bool {
    true
}

fn default_data_seed() -> u64 {
    11
}

fn default_dim() -> usize {
    EmbeddingSpec::default().dim
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    SoftmaxTfidf,
    MlpEmbedAvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelChoice,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_hidden() -> usize {
    128
}

fn default_batch() -> usize {
    TrainConfig::DEFAULT_BATCH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentParams {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub same_class_only: bool,
}

fn default_p() -> f64 {
    AugmentConfig::default().p
}

fn default_top_k() -> usize {
    AugmentConfig::default().top_k
}

fn default_runs() -> usize {
    AugmentConfig::default().runs
}

fn default_alpha() -> f64 {
    MixupConfig::default().alpha
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            p: default_p(),
            top_k: default_top_k(),
            runs: default_runs(),
            alpha: default_alpha(),
            same_class_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RttSettings {
    #[serde(default = "default_backend")]
    pub backend: BackendChoice,
    #[serde(default = "default_pivots")]
    pub pivots: Vec<String>,
    /// `{lang: path}` of mock dictionaries. Synthetic datasets generate
    /// their own when empty.
    #[serde(default)]
    pub mock_tables: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
}

fn default_backend() -> BackendChoice {
    BackendChoice::Mock
}

fn default_pivots() -> Vec<String> {
    vec!["fr".into(), "de".into()]
}

impl Default for RttSettings {
    fn default() -> Self {
        RttSettings { backend: BackendChoice::Mock, pivots: default_pivots(), mock_tables: BTreeMap::new(), endpoint: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Word vectors; synthetic datasets generate matching ones when absent.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
}

/// Published numbers a result grid is annotated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    AgNews,
    Sentiment140,
}

impl Reference {
    /// Validation error reported for `(method, train_size, n_aug)`.
    pub fn value(self, method: Method, train_size: usize, n_aug: usize) -> Option<f64> {
        match (self, method, train_size, n_aug) {
            (Reference::AgNews, Method::Synonym, 1000, 5) => Some(0.1824),
            (Reference::AgNews, Method::Synonym, 1000, 10) => Some(0.1809),
            (Reference::AgNews, Method::Synonym, 10000, 5) => Some(0.12136),
            (Reference::AgNews, Method::Synonym, 10000, 10) => Some(0.121),
            (Reference::Sentiment140, Method::Embedding, 10000, 5) => Some(0.25434),
            (Reference::Sentiment140, Method::Embedding, 10000, 10) => Some(0.25764),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub dataset: DatasetConfig,
    pub methods: Vec<Method>,
    pub train_sizes: Vec<usize>,
    pub val_size: usize,
    #[serde(default = "default_n_aug")]
    pub n_aug: usize,
    /// Explicit seeds; when empty, `0..repeats`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub model: ModelConfig,
    #[serde(default)]
    pub augment: AugmentParams,
    #[serde(default)]
    pub resources: ResourceConfig,
    #[serde(default)]
    pub rtt: RttSettings,
    #[serde(default)]
    pub reference: Option<Reference>,
}

fn default_n_aug() -> usize {
    5
}

fn default_repeats() -> usize {
    5
}

impl ExperimentConfig {
    /// Parses a TOML config. Relative paths are taken relative to the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|source| BenchError::Toml { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|source| BenchError::Toml { path: PathBuf::from("<inline>"), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetConfig::Csv { path, .. } = &mut self.dataset {
            fix(path);
        }
        if let Some(p) = &mut self.resources.lexicon {
            fix(p);
        }
        if let Some(p) = &mut self.resources.embeddings {
            fix(p);
        }
        for p in self.rtt.mock_tables.values_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if self.train_sizes.is_empty() {
            return bad("no train sizes".into());
        }
        if self.seeds.is_empty() && self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.model.epochs == 0 || self.model.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if self.model.kind == ModelChoice::MlpEmbedAvg && self.model.hidden == 0 {
            return bad("hidden must be positive".into());
        }
        if self.augment.alpha.is_nan() || self.augment.alpha <= 0.0 {
            return bad(format!("alpha must be positive, got {}", self.augment.alpha));
        }
        self.augment_config().validate().map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
        if self.rtt.pivots.is_empty() && self.methods.iter().any(|m| m.text_method() == TextMethod::Rtt) {
            return bad("rtt methods need at least one pivot".into());
        }
        Ok(())
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.repeats as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig { p: self.augment.p, top_k: self.augment.top_k, runs: self.augment.runs, ..AugmentConfig::default() }
    }

    /// `n_aug` actually used for a method: round-trip translation yields at
    /// most one paraphrase per pivot language.
    pub fn effective_n_aug(&self, method: Method) -> usize {
        if method.text_method() == TextMethod::Rtt {
            self.n_aug.min(self.rtt.pivots.len())
        } else {
            self.n_aug
        }
    }

    fn fingerprint(&self) -> String {
        crate::vectorize::fingerprint([self.to_toml().as_str()])
    }
}

/// Everything a run needs, loaded before the first cell starts.
pub struct Resources {
    pub dataset: Dataset,
    pub lexicon: Option<Arc<SynonymLexicon>>,
    pub embeddings: Option<Arc<EmbeddingModel>>,
    pub translator: Option<Arc<dyn TranslationBackend>>,
}

impl Resources {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self, BenchError> {
        let text_methods: Vec<TextMethod> = cfg.methods.iter().map(|m| m.text_method()).collect();
        let needs_embeddings =
            text_methods.contains(&TextMethod::Embedding) || cfg.model.kind == ModelChoice::MlpEmbedAvg;
        let needs_lexicon =
            text_methods.contains(&TextMethod::Synonym) || matches!(cfg.dataset, DatasetConfig::Synthetic { .. });
        let needs_rtt = text_methods.contains(&TextMethod::Rtt);

        let lexicon = match (&cfg.resources.lexicon, needs_lexicon) {
            (Some(dir), true) => {
                if !dir.is_dir() {
                    return Err(BenchError::ResourceMissing(format!("lexicon directory {}", dir.display())));
                }
                Some(Arc::new(parse_wndb(dir)?))
            }
            (None, true) => return Err(BenchError::ResourceMissing("resources.lexicon is not set".into())),
            _ => None,
        };

        let mut generated_tables = None;
        let (dataset, synthetic_vectors) = match &cfg.dataset {
            DatasetConfig::Csv { path, text, label, has_header, label_order } => {
                if !path.is_file() {
                    return Err(BenchError::ResourceMissing(format!("dataset {}", path.display())));
                }
                let spec = ColumnSpec {
                    text: text.clone(),
                    label: label.clone(),
                    has_header: *has_header,
                    label_order: label_order.clone(),
                };
                (load_csv(path, &spec)?, None)
            }
            DatasetConfig::Synthetic { preset, n_docs, seed, embedding_dim } => {
                let lex = lexicon.as_ref().expect("lexicon resolved above");
                let spec = match preset {
                    SyntheticPreset::News => CorpusSpec::news_like(*n_docs, *seed),
                    SyntheticPreset::Sentiment => CorpusSpec::sentiment_like(*n_docs, *seed),
                };
                let inventory = spec.inventory(lex);
                generated_tables = Some(synth::pivot_tables(&inventory));
                let vectors = (needs_embeddings && cfg.resources.embeddings.is_none()).then(|| {
                    let espec = EmbeddingSpec { dim: *embedding_dim, ..EmbeddingSpec::default() };
                    synth::generate_embeddings(lex, &inventory, &espec)
                });
                (synth::generate_corpus(&inventory, &spec), vectors)
            }
        };

        let embeddings = match (&cfg.resources.embeddings, synthetic_vectors) {
            _ if !needs_embeddings => None,
            (Some(path), _) => {
                if !path.is_file() {
                    return Err(BenchError::ResourceMissing(format!("embedding file {}", path.display())));
                }
                Some(Arc::new(load_auto(path)?))
            }
            (None, Some(v)) => Some(Arc::new(v)),
            (None, None) => return Err(BenchError::ResourceMissing("resources.embeddings is not set".into())),
        };

        let translator: Option<Arc<dyn TranslationBackend>> = if !needs_rtt {
            None
        } else {
            match cfg.rtt.backend {
                BackendChoice::Http => {
                    let endpoint = cfg
                        .rtt
                        .endpoint
                        .clone()
                        .ok_or_else(|| BenchError::ResourceMissing("rtt.endpoint is not set".into()))?;
                    let backend = HttpBackend::new(HttpBackendConfig::new(endpoint))
                        .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
                    Some(Arc::new(backend))
                }
                BackendChoice::Mock => {
                    let mut mock = MockBackend::new();
                    for lang in &cfg.rtt.pivots {
                        if let Some(path) = cfg.rtt.mock_tables.get(lang) {
                            if !path.is_file() {
                                return Err(BenchError::ResourceMissing(format!("mock dictionary {}", path.display())));
                            }
                            mock = mock.load_table(lang, path).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
                        } else if let Some(table) = generated_tables.as_ref().and_then(|t| t.get(lang)) {
                            mock = mock.with_table(lang, table.clone());
                        } else {
                            return Err(BenchError::ResourceMissing(format!("mock dictionary for pivot {lang:?}")));
                        }
                    }
                    Some(Arc::new(mock))
                }
            }
        };

        Ok(Resources { dataset, lexicon, embeddings, translator })
    }

    fn augmenter(&self, cfg: &ExperimentConfig, method: TextMethod) -> Result<Box<dyn Augmenter>, String> {
        let acfg = cfg.augment_config();
        Ok(match method {
            TextMethod::Identity => Box::new(make_identity_augmenter()),
            TextMethod::Synonym => Box::new(
                SynonymAugmenter::new(self.lexicon.clone().ok_or("no lexicon")?, acfg).map_err(|e| e.to_string())?,
            ),
            TextMethod::Embedding => Box::new(
                EmbeddingAugmenter::new(self.embeddings.clone().ok_or("no embeddings")?, acfg)
                    .map_err(|e| e.to_string())?,
            ),
            TextMethod::Rtt => Box::new(
                RttAugmenter::new(
                    self.translator.clone().ok_or("no translation backend")?,
                    cfg.rtt.pivots.clone(),
                    RetryPolicy::default(),
                )
                .map_err(|e| e.to_string())?,
            ),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub method: Method,
    pub train_size: usize,
    pub n_aug: usize,
    pub seed: u64,
}

impl CellKey {
    /// File-name-safe identifier.
    pub fn slug(&self) -> String {
        format!("{}_{}_{}_{}", self.method.as_str().replace('+', "-"), self.train_size, self.n_aug, self.seed)
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} train={} n_aug={} seed={}", self.method, self.train_size, self.n_aug, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub status: CellStatus,
    pub error: Option<String>,
    /// Rows in the (augmented) training set.
    pub train_rows: usize,
    pub final_val_error: Option<f64>,
    pub best_val_error: Option<f64>,
    pub log: TrainLog,
}

impl CellResult {
    fn failed(key: CellKey, error: String) -> Self {
        CellResult {
            key,
            status: CellStatus::Failed,
            error: Some(error),
            train_rows: 0,
            final_val_error: None,
            best_val_error: None,
            log: TrainLog::default(),
        }
    }
}

/// Mean ± sample standard deviation of final validation error over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub train_size: usize,
    pub n_aug: usize,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    pub schema_version: u32,
    pub model: ModelConfig,
    pub augment: AugmentParams,
    pub n_aug: usize,
    pub val_size: usize,
    pub seeds: Vec<u64>,
    pub rtt_pivots: Vec<String>,
    pub rtt_backend: BackendChoice,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub metadata: Metadata,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    pub fn failed_cells(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed)
    }

    pub fn aggregate(&self, method: Method, train_size: usize, n_aug: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.train_size == train_size && a.n_aug == n_aug)
    }

    pub fn cell(&self, key: &CellKey) -> Option<&CellResult> {
        self.cells.iter().find(|c| &c.key == key)
    }
}

pub fn metadata(cfg: &ExperimentConfig) -> Metadata {
    let mut notes = vec![
        "dataset sizes count documents, not word tokens".to_string(),
        "the no-augmentation and mixup-only arms train on the original set repeated n_aug + 1 times".to_string(),
        "TFIDF is refit on each cell's augmented training set".to_string(),
        "validation error is 1 - accuracy after the last epoch; no early stopping".to_string(),
    ];
    if cfg.methods.iter().any(|m| m.text_method() == TextMethod::Rtt) {
        notes.push(format!("round-trip translation n_aug is capped at {} pivot languages", cfg.rtt.pivots.len()));
    }
    if matches!(cfg.dataset, DatasetConfig::Synthetic { .. }) {
        notes.push("synthetic corpus and word vectors generated from the WordNet lexicon".to_string());
    }
    Metadata {
        name: cfg.name.clone(),
        schema_version: cfg.schema_version,
        model: cfg.model.clone(),
        augment: cfg.augment.clone(),
        n_aug: cfg.n_aug,
        val_size: cfg.val_size,
        seeds: cfg.seed_list(),
        rtt_pivots: cfg.rtt.pivots.clone(),
        rtt_backend: cfg.rtt.backend,
        notes,
    }
}

/// Cells in run order: method (config order), train size, seed.
pub fn cell_keys(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for &method in &cfg.methods {
        for &train_size in &cfg.train_sizes {
            for seed in cfg.seed_list() {
                keys.push(CellKey { method, train_size, n_aug: cfg.effective_n_aug(method), seed });
            }
        }
    }
    keys
}

/// Called once per cell; the flag is set when it came from a checkpoint.
pub type ProgressFn = Box<dyn Fn(&CellResult, bool) + Send + Sync>;

/// Run options that do not affect results.
#[derive(Default)]
pub struct RunOptions {
    /// Directory for per-cell checkpoint files.
    pub checkpoint_dir: Option<PathBuf>,
    /// Worker threads for independent cells; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Called after each cell finishes (including cells loaded from
    /// checkpoints).
    pub progress: Option<ProgressFn>,
}

pub fn run_cell(cfg: &ExperimentConfig, res: &Resources, key: CellKey) -> CellResult {
    match try_cell(cfg, res, key) {
        Ok(cell) => cell,
        Err(e) => CellResult::failed(key, e),
    }
}

fn try_cell(cfg: &ExperimentConfig, res: &Resources, key: CellKey) -> Result<CellResult, String> {
    let (train_set, val_set) = split(
        &res.dataset,
        &SplitSpec { train_size: key.train_size, val_size: cfg.val_size, seed: key.seed },
    )
    .map_err(|e| e.to_string())?;
    let augmenter = res.augmenter(cfg, key.method.text_method())?;
    let augmented = build_augmented(&train_set, augmenter.as_ref(), key.n_aug, key.seed).map_err(|e| e.to_string())?;
    let expected = (key.n_aug + 1) * train_set.len();
    if augmented.len() != expected {
        return Err(format!("augmented set has {} rows, expected {expected}", augmented.len()));
    }

    let (x_train, x_val, kind) = match cfg.model.kind {
        ModelChoice::SoftmaxTfidf => {
            let tfidf = tfidf_fit(&augmented).map_err(|e: VectorizeError| e.to_string())?;
            (tfidf_transform(&tfidf, &augmented), tfidf_transform(&tfidf, &val_set), ModelKind::Softmax)
        }
        ModelChoice::MlpEmbedAvg => {
            let emb = res.embeddings.as_ref().ok_or("no embeddings")?;
            (embed_dataset(emb, &augmented), embed_dataset(emb, &val_set), ModelKind::Mlp { hidden: cfg.model.hidden })
        }
    };
    let mut tcfg = TrainConfig::new(kind, cfg.model.epochs, key.seed);
    tcfg.batch_size = Some(cfg.model.batch_size);
    if key.method.uses_mixup() {
        tcfg.mixup = Some(MixupConfig {
            alpha: cfg.augment.alpha,
            seed: key.seed,
            same_class_only: cfg.augment.same_class_only,
        });
    }
    let (_, log) = train(&tcfg, &x_train, &x_val).map_err(|e: LearnError| e.to_string())?;
    Ok(CellResult {
        key,
        status: CellStatus::Ok,
        error: None,
        train_rows: augmented.len(),
        final_val_error: log.last().map(|e| e.val_error),
        best_val_error: log.best_val_error(),
        log,
    })
}

fn checkpoint_path(dir: &Path, key: &CellKey) -> PathBuf {
    dir.join("cells").join(format!("{}.json", key.slug()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

fn prepare_checkpoints(cfg: &ExperimentConfig, dir: &Path) -> Result<HashMap<CellKey, CellResult>, BenchError> {
    fs::create_dir_all(dir.join("cells"))?;
    let stamp = dir.join("config.fingerprint");
    let fp = cfg.fingerprint();
    match fs::read_to_string(&stamp) {
        Ok(existing) if existing.trim() != fp => return Err(BenchError::ConfigChanged(dir.to_path_buf())),
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => write_atomic(&stamp, fp.as_bytes())?,
        Err(e) => return Err(e.into()),
    }
    let mut done = HashMap::new();
    for key in cell_keys(cfg) {
        let path = checkpoint_path(dir, &key);
        if let Ok(text) = fs::read_to_string(&path) {
            let cell: CellResult = serde_json::from_str(&text)?;
            if cell.status == CellStatus::Ok && cell.key == key {
                done.insert(key, cell);
            }
        }
    }
    Ok(done)
}

pub fn aggregate(cells: &[CellResult], reference: Option<Reference>) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(Method, usize, usize), Vec<f64>> = BTreeMap::new();
    for c in cells {
        if let Some(err) = c.final_val_error {
            groups.entry((c.key.method, c.key.train_size, c.key.n_aug)).or_default().push(err);
        }
    }
    groups
        .into_iter()
        .map(|((method, train_size, n_aug), errs)| {
            let (mean, std) = mean_std(&errs);
            Aggregate {
                method,
                train_size,
                n_aug,
                n: errs.len(),
                mean,
                std,
                reference: reference.and_then(|r| r.value(method, train_size, n_aug)),
            }
        })
        .collect()
}

/// Arithmetic mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult, BenchError> {
    cfg.validate()?;
    let mut done = match &opts.checkpoint_dir {
        Some(dir) => prepare_checkpoints(cfg, dir)?,
        None => HashMap::new(),
    };
    let keys = cell_keys(cfg);
    if let Some(report) = &opts.progress {
        for key in &keys {
            if let Some(cell) = done.get(key) {
                report(cell, true);
            }
        }
    }
    let todo: Vec<CellKey> = keys.iter().copied().filter(|k| !done.contains_key(k)).collect();
    if !todo.is_empty() {
        let res = Resources::resolve(cfg)?;
        let work = || -> Result<Vec<CellResult>, BenchError> {
            todo.par_iter()
                .map(|&key| {
                    let cell = run_cell(cfg, &res, key);
                    if let (Some(dir), CellStatus::Ok) = (&opts.checkpoint_dir, cell.status) {
                        write_atomic(&checkpoint_path(dir, &key), &serde_json::to_vec(&cell)?)?;
                    }
                    if let Some(report) = &opts.progress {
                        report(&cell, false);
                    }
                    Ok(cell)
                })
                .collect()
        };
        let fresh = match opts.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| BenchError::InvalidConfig(e.to_string()))?
                .install(work)?,
            None => work()?,
        };
        for cell in fresh {
            done.insert(cell.key, cell);
        }
    }
    let cells: Vec<CellResult> = keys.iter().map(|k| done.remove(k).expect("every cell ran")).collect();
    let aggregates = aggregate(&cells, cfg.reference);
    Ok(ExperimentResult { metadata: metadata(cfg), cells, aggregates })
}

/// One row of the n_aug comparison grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumAugRow {
    pub method: Method,
    pub train_size: usize,
    pub n_aug: usize,
    pub mean: f64,
    pub std: f64,
    pub reference: Option<f64>,
}

/// Runs the experiment once per `n_aug` value and tabulates mean error per
/// `(method, train_size, n_aug)`. With a checkpoint directory each value
/// gets its own subdirectory.
pub fn compare_num_augmentations(
    cfg: &ExperimentConfig,
    n_aug_values: &[usize],
    opts: &RunOptions,
) -> Result<(Vec<NumAugRow>, Vec<ExperimentResult>), BenchError> {
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &n in n_aug_values {
        let mut sub = cfg.clone();
        sub.n_aug = n;
        let sub_opts = RunOptions {
            checkpoint_dir: opts.checkpoint_dir.as_ref().map(|d| d.join(format!("n_aug_{n}"))),
            jobs: opts.jobs,
            progress: None,
        };
        let result = run_experiment(&sub, &sub_opts)?;
        for a in &result.aggregates {
            rows.push(NumAugRow {
                method: a.method,
                train_size: a.train_size,
                n_aug: a.n_aug,
                mean: a.mean,
                std: a.std,
                reference: a.reference,
            });
        }
        results.push(result);
    }
    rows.sort_by_key(|r| (r.method, r.train_size, r.n_aug));
    Ok((rows, results))
}

pub fn write_num_aug_table(rows: &[NumAugRow], path: impl AsRef<Path>) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "train_size", "n_aug", "mean_val_error", "std_val_error", "reference"])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.train_size.to_string(),
            r.n_aug.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.reference.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const RESULTS_CSV_HEADER: [&str; 9] =
    ["method", "train_size", "n_aug", "seed", "final_val_error", "best_val_error", "epochs", "status", "error"];

/// Long-format row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub train_size: usize,
    pub n_aug: usize,
    pub seed: u64,
    pub final_val_error: Option<f64>,
    pub best_val_error: Option<f64>,
    pub epochs: usize,
    pub status: CellStatus,
    pub error: Option<String>,
}

impl From<&CellResult> for ResultRow {
    fn from(c: &CellResult) -> Self {
        ResultRow {
            method: c.key.method,
            train_size: c.key.train_size,
            n_aug: c.key.n_aug,
            seed: c.key.seed,
            final_val_error: c.final_val_error,
            best_val_error: c.best_val_error,
            epochs: c.log.len(),
            status: c.status,
            error: c.error.clone(),
        }
    }
}

/// Writes `results.csv`, `results.json` and `curves/<cell>.csv`.
pub fn emit_results(result: &ExperimentResult, out_dir: impl AsRef<Path>) -> Result<(), BenchError> {
    let out = out_dir.as_ref();
    fs::create_dir_all(out.join("curves"))?;
    let mut w = csv::Writer::from_path(out.join("results.csv"))?;
    for c in &result.cells {
        w.serialize(ResultRow::from(c))?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(result)?;
    write_atomic(&out.join("results.json"), json.as_bytes())?;
    for c in result.cells.iter().filter(|c| c.status == CellStatus::Ok) {
        c.log
            .write_csv(out.join("curves").join(format!("{}.csv", c.key.slug())))
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
    }
    Ok(())
}

pub fn load_results(out_dir: impl AsRef<Path>) -> Result<ExperimentResult, BenchError> {
    Ok(serde_json::from_str(&fs::read_to_string(out_dir.as_ref().join("results.json"))?)?)
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
