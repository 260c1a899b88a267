//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 for usage
//! errors, 2 for runtime failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{
    make_identity_augmenter, AugmentConfig, Augmenter, EmbeddingAugmenter, HttpBackend, HttpBackendConfig, MockBackend,
    RetryPolicy, RttAugmenter, SynonymAugmenter, TranslationBackend,
};
use crate::bench::{
    self, compare_num_augmentations, emit_results, run_experiment, write_num_aug_table, BenchError, CellResult,
    CellStatus, ExperimentConfig, RunOptions,
};
use crate::corpus::{build_augmented, load_csv, read_jsonl, write_jsonl, ColumnSpec, Dataset};
use crate::embeddings::{load_auto, EmbeddingModel};
use crate::learn::{error_rate, train, Model, ModelKind, TrainConfig};
use crate::vectorize::{embed_dataset, tfidf_fit, tfidf_transform, FeatureMatrix, MixupConfig, TfidfModel};
use crate::wordnet::{parse_wndb, Pos, SynonymLexicon};

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T = ()> = Result<T, CliError>;

/// Seed given as an integer or the word `random`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl std::str::FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(SeedArg::Random);
        }
        s.parse().map(SeedArg::Fixed).map_err(|_| format!("expected an integer or `random`, got {s:?}"))
    }
}

impl SeedArg {
    pub fn resolve(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Random => rand::rng().random(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "textaug", version, about = "Text augmentation toolkit and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write augmented copies of a dataset as JSON lines.
    Augment(AugmentArgs),
    /// Fit a classifier and save it with its epoch log.
    Train(TrainArgs),
    /// Report the error of a saved classifier on a dataset.
    Evaluate(EvaluateArgs),
    /// Run an experiment grid from a TOML config.
    Experiment(ExperimentArgs),
    /// Summarize a lexicon directory, embedding file or results file.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Synonym,
    Embedding,
    Rtt,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mock,
    Http,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Text column (name or 0-based index) for CSV input.
    #[arg(long, default_value = "text")]
    pub text_column: String,
    /// Label column (name or 0-based index) for CSV input.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// CSV input has no header row.
    #[arg(long)]
    pub no_header: bool,
}

impl InputArgs {
    fn load(&self, path: &Path) -> CliResult<Dataset> {
        if !path.is_file() {
            return Err(CliError::Runtime(format!("cannot read {}", path.display())));
        }
        let ds = if path.extension().is_some_and(|e| e == "jsonl") {
            read_jsonl(path, None)
        } else {
            let col = |s: &str| match s.parse::<usize>() {
                Ok(i) => crate::corpus::ColumnRef::Index(i),
                Err(_) => crate::corpus::ColumnRef::Name(s.to_string()),
            };
            let spec = ColumnSpec {
                text: col(&self.text_column),
                label: col(&self.label_column),
                has_header: !self.no_header,
                label_order: None,
            };
            load_csv(path, &spec)
        };
        ds.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Augmented copies per document.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Pivot language; repeat to cycle through several.
    #[arg(long = "pivot", default_value = "fr")]
    pub pivots: Vec<String>,
    #[arg(long, value_enum, default_value_t = BackendArg::Mock)]
    pub backend: BackendArg,
    #[arg(long, default_value = "20190905")]
    pub seed: SeedArg,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// WordNet database directory.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Word vectors (text format, or binary with a `.bin` extension).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Mock dictionary as `LANG=PATH`; repeat per pivot.
    #[arg(long = "mock-dict")]
    pub mock_dicts: Vec<String>,
    /// Translation endpoint for the http backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Also write the translation audit log (round-trip translation only).
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[command(flatten)]
    pub input_format: InputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureArg {
    Tfidf,
    EmbedAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Softmax,
    Mlp,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    /// Output directory for model.json, features.json and train_log.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Softmax)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = FeatureArg::Tfidf)]
    pub features: FeatureArg,
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    /// Mix training batches with this Beta parameter.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub same_class_only: bool,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = "20190905")]
    pub seed: SeedArg,
    #[command(flatten)]
    pub input_format: InputArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Write `{rows, error}` as JSON here as well.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub input_format: InputArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Compare several n_aug values (comma separated) instead of the
    /// config's single value.
    #[arg(long, value_delimiter = ',')]
    pub n_aug_values: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Lexicon directory, embedding file, results.csv or results.json.
    pub resource: PathBuf,
    /// Word to look up (synonyms or nearest neighbours).
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Augment(a) => cmd_augment(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::Inspect(a) => cmd_inspect(&a),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(runtime)?.install(f)),
        None => Ok(f()),
    }
}

/// Writes through a sibling temporary file that is renamed into place only
/// when `write` succeeds.
fn write_output(path: &Path, write: impl FnOnce(&Path) -> CliResult) -> CliResult {
    let name = path.file_name().ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    match write(&tmp).and_then(|()| fs::rename(&tmp, path).map_err(runtime)) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn require<'a>(opt: &'a Option<PathBuf>, flag: &str, method: &str) -> CliResult<&'a PathBuf> {
    opt.as_ref().ok_or_else(|| CliError::Usage(format!("--{flag} is required for {method}")))
}

fn load_lexicon(dir: &Path) -> CliResult<SynonymLexicon> {
    parse_wndb(dir).map_err(|e| CliError::Runtime(format!("lexicon {}: {e}", dir.display())))
}

fn load_embeddings(path: &Path) -> CliResult<EmbeddingModel> {
    if !path.is_file() {
        return Err(CliError::Runtime(format!("embedding file {} not found", path.display())));
    }
    load_auto(path).map_err(|e| CliError::Runtime(format!("embedding file {}: {e}", path.display())))
}

fn translator(a: &AugmentArgs) -> CliResult<Arc<dyn TranslationBackend>> {
    match a.backend {
        BackendArg::Http => {
            let endpoint =
                a.endpoint.clone().ok_or_else(|| CliError::Usage("--endpoint is required for --backend http".into()))?;
            Ok(Arc::new(HttpBackend::new(HttpBackendConfig::new(endpoint)).map_err(runtime)?))
        }
        BackendArg::Mock => {
            let mut tables = BTreeMap::new();
            for spec in &a.mock_dicts {
                let (lang, path) = spec
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("--mock-dict expects LANG=PATH, got {spec:?}")))?;
                tables.insert(lang.to_string(), PathBuf::from(path));
            }
            let mut mock = MockBackend::new();
            for lang in &a.pivots {
                let path = tables
                    .get(lang)
                    .ok_or_else(|| CliError::Usage(format!("no --mock-dict given for pivot {lang:?}")))?;
                mock = mock.load_table(lang, path).map_err(runtime)?;
            }
            Ok(Arc::new(mock))
        }
    }
}

pub fn cmd_augment(a: &AugmentArgs) -> CliResult {
    let seed = a.seed.resolve();
    eprintln!("seed: {seed}");
    let cfg = AugmentConfig { p: a.p, top_k: a.top_k, runs: a.runs, seed, ..AugmentConfig::default() };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut rtt = None;
    let augmenter: Box<dyn Augmenter> = match a.method {
        MethodArg::Identity => Box::new(make_identity_augmenter()),
        MethodArg::Synonym => {
            let dir = require(&a.lexicon, "lexicon", "synonym")?;
            Box::new(SynonymAugmenter::new(Arc::new(load_lexicon(dir)?), cfg).map_err(runtime)?)
        }
        MethodArg::Embedding => {
            let path = require(&a.embeddings, "embeddings", "embedding")?;
            Box::new(EmbeddingAugmenter::new(Arc::new(load_embeddings(path)?), cfg).map_err(runtime)?)
        }
        MethodArg::Rtt => {
            let aug = Arc::new(RttAugmenter::new(translator(a)?, a.pivots.clone(), RetryPolicy::default()).map_err(runtime)?);
            rtt = Some(aug.clone());
            Box::new(SharedAugmenter(aug))
        }
    };
    let input = a.input_format.load(&a.input)?;
    let out = with_jobs(a.jobs, || build_augmented(&input, augmenter.as_ref(), a.n, seed))?.map_err(runtime)?;
    write_output(&a.output, |tmp| write_jsonl(&out, tmp).map_err(runtime))?;
    if let (Some(path), Some(rtt)) = (&a.audit, &rtt) {
        let lines: Vec<String> = rtt.audit().iter().map(|r| serde_json::to_string(r).expect("plain record")).collect();
        write_output(path, |tmp| fs::write(tmp, lines.join("\n") + "\n").map_err(runtime))?;
    }

    let originals = input.len();
    let augmented = out.len() - originals;
    let by_id: BTreeMap<u64, &str> = input.records.iter().map(|d| (d.id, d.text.as_str())).collect();
    let skipped = out
        .records
        .iter()
        .filter(|d| match d.origin {
            crate::corpus::Origin::Augmented { parent_id, .. } => by_id.get(&parent_id) == Some(&d.text.as_str()),
            crate::corpus::Origin::Original => false,
        })
        .count();
    eprintln!("originals: {originals}, augmented: {augmented}, skipped (unchanged): {skipped}");
    Ok(())
}

struct SharedAugmenter(Arc<RttAugmenter>);

impl Augmenter for SharedAugmenter {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn augment(&self, text: &str, rng: &mut crate::rng::Stream) -> Result<String, crate::augment::AugmentError> {
        self.0.augment(text, rng)
    }

    fn augment_copy(
        &self,
        text: &str,
        copy: usize,
        rng: &mut crate::rng::Stream,
    ) -> Result<String, crate::augment::AugmentError> {
        self.0.augment_copy(text, copy, rng)
    }

    fn max_copies(&self) -> Option<usize> {
        self.0.max_copies()
    }
}

/// Feature settings stored next to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub features: FeatureArg,
    pub label_names: Vec<String>,
    pub seed: u64,
}

fn vectorize_pair(
    kind: FeatureArg,
    train_set: &Dataset,
    val_set: &Dataset,
    embeddings: &Option<PathBuf>,
) -> CliResult<(FeatureMatrix, FeatureMatrix, Option<TfidfModel>)> {
    match kind {
        FeatureArg::Tfidf => {
            let model = tfidf_fit(train_set).map_err(runtime)?;
            Ok((tfidf_transform(&model, train_set), tfidf_transform(&model, val_set), Some(model)))
        }
        FeatureArg::EmbedAvg => {
            let emb = load_embeddings(require(embeddings, "embeddings", "embed-avg features")?)?;
            Ok((embed_dataset(&emb, train_set), embed_dataset(&emb, val_set), None))
        }
    }
}

pub fn cmd_train(a: &TrainArgs) -> CliResult {
    let seed = a.seed.resolve();
    eprintln!("seed: {seed}");
    if a.epochs == 0 || a.batch == 0 {
        return Err(CliError::Usage("--epochs and --batch must be positive".into()));
    }
    let train_set = a.input_format.load(&a.train)?;
    let val_set = a.input_format.load(&a.val)?;
    if train_set.num_classes() != val_set.num_classes() {
        return Err(CliError::Runtime("training and validation sets have different label counts".into()));
    }
    let (x_train, x_val, tfidf) = vectorize_pair(a.features, &train_set, &val_set, &a.embeddings)?;
    let kind = match a.model {
        ModelArg::Softmax => ModelKind::Softmax,
        ModelArg::Mlp => ModelKind::Mlp { hidden: a.hidden },
    };
    let mut cfg = TrainConfig::new(kind, a.epochs, seed);
    cfg.batch_size = Some(a.batch);
    if let Some(alpha) = a.alpha {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(CliError::Usage(format!("--alpha must be positive, got {alpha}")));
        }
        cfg.mixup = Some(MixupConfig { alpha, seed, same_class_only: a.same_class_only });
    }
    let (model, log) = train(&cfg, &x_train, &x_val).map_err(runtime)?;

    fs::create_dir_all(&a.out).map_err(runtime)?;
    let info = FeatureInfo { features: a.features, label_names: train_set.label_names.clone(), seed };
    write_output(&a.out.join("model.json"), |tmp| model.save(tmp).map_err(runtime))?;
    write_output(&a.out.join("features.json"), |tmp| {
        fs::write(tmp, serde_json::to_string_pretty(&info).map_err(runtime)?).map_err(runtime)
    })?;
    if let Some(tfidf) = &tfidf {
        write_output(&a.out.join("tfidf.json"), |tmp| tfidf.save(tmp).map_err(runtime))?;
    }
    write_output(&a.out.join("train_log.csv"), |tmp| log.write_csv(tmp).map_err(runtime))?;
    if let Some(last) = log.last() {
        println!("epochs: {}, final val error: {:.5}, best val error: {:.5}", log.len(), last.val_error, log.best_val_error().unwrap_or(f64::NAN));
    }
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult {
    eprintln!("seed: none");
    let info: FeatureInfo = serde_json::from_str(
        &fs::read_to_string(a.model.join("features.json")).map_err(|e| CliError::Runtime(format!("{}: {e}", a.model.display())))?,
    )
    .map_err(runtime)?;
    let model = Model::load(a.model.join("model.json")).map_err(runtime)?;
    let data = a.input_format.load(&a.data)?;
    let fm = match info.features {
        FeatureArg::Tfidf => tfidf_transform(&TfidfModel::load(a.model.join("tfidf.json")).map_err(runtime)?, &data),
        FeatureArg::EmbedAvg => embed_dataset(&load_embeddings(require(&a.embeddings, "embeddings", "embed-avg features")?)?, &data),
    };
    if fm.n_classes() != model.n_classes() {
        return Err(CliError::Runtime(format!("data has {} labels, model predicts {}", fm.n_classes(), model.n_classes())));
    }
    let error = error_rate(&model, &fm).map_err(runtime)?;
    println!("rows: {}, error: {error:.5}", fm.n_rows());
    if let Some(path) = &a.output {
        let json = serde_json::json!({ "rows": fm.n_rows(), "error": error });
        write_output(path, |tmp| fs::write(tmp, json.to_string() + "\n").map_err(runtime))?;
    }
    Ok(())
}

fn progress_line(cell: &CellResult, resumed: bool) {
    let tag = if resumed { " (checkpoint)" } else { "" };
    match cell.status {
        CellStatus::Ok => eprintln!(
            "cell {}: final val error {:.5}{tag}",
            cell.key,
            cell.final_val_error.unwrap_or(f64::NAN)
        ),
        CellStatus::Failed => eprintln!("cell {}: FAILED: {}", cell.key, cell.error.as_deref().unwrap_or("")),
    }
}

fn bench_error(e: BenchError) -> CliError {
    match e {
        BenchError::InvalidConfig(_) | BenchError::Toml { .. } => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn cmd_experiment(a: &ExperimentArgs) -> CliResult {
    if !a.config.is_file() {
        return Err(CliError::Usage(format!("config {} not found", a.config.display())));
    }
    let cfg = ExperimentConfig::load(&a.config).map_err(bench_error)?;
    eprintln!("seeds: {:?}", cfg.seed_list());
    if a.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    fs::create_dir_all(&a.out).map_err(runtime)?;
    let opts = RunOptions {
        checkpoint_dir: Some(a.out.join("checkpoints")),
        jobs: a.jobs,
        progress: Some(Box::new(progress_line)),
    };
    let results = if a.n_aug_values.is_empty() {
        let result = run_experiment(&cfg, &opts).map_err(bench_error)?;
        emit_results(&result, &a.out).map_err(runtime)?;
        vec![result]
    } else {
        let (rows, results) = compare_num_augmentations(&cfg, &a.n_aug_values, &opts).map_err(bench_error)?;
        for r in &results {
            for c in &r.cells {
                progress_line(c, false);
            }
            emit_results(r, a.out.join(format!("n_aug_{}", r.metadata.n_aug))).map_err(runtime)?;
        }
        write_num_aug_table(&rows, a.out.join("num_augmentations.csv")).map_err(runtime)?;
        results
    };
    for r in &results {
        for agg in &r.aggregates {
            let reference = agg.reference.map(|v| format!(" (reference {v})")).unwrap_or_default();
            println!(
                "{} train={} n_aug={}: {:.5} ± {:.5} over {} seeds{reference}",
                agg.method, agg.train_size, agg.n_aug, agg.mean, agg.std, agg.n
            );
        }
    }
    let failed: Vec<String> = results.iter().flat_map(|r| r.failed_cells()).map(|c| c.key.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{} failed cells: {}", failed.len(), failed.join("; "))))
    }
}

pub fn cmd_inspect(a: &InspectArgs) -> CliResult {
    let path = &a.resource;
    let mut out = std::io::stdout().lock();
    let mut say = |s: String| writeln!(out, "{s}").map_err(runtime);
    if path.is_dir() {
        let lex = load_lexicon(path)?;
        for pos in Pos::ALL {
            say(format!("{pos}: {} lemmas, {} synsets", lex.lemma_count(pos), lex.synset_count(pos)))?;
        }
        if let Some(word) = &a.word {
            for pos in Pos::ALL {
                say(format!("{word} ({pos}): {}", lex.synonyms(word, pos).join(", ")))?;
            }
        }
        return Ok(());
    }
    if !path.is_file() {
        return Err(CliError::Runtime(format!("cannot read {}", path.display())));
    }
    let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
    if name.ends_with(".csv") {
        let rows = bench::read_results_csv(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        return summarize_results(rows, &mut say);
    }
    if name.ends_with(".json") {
        let result = bench::load_results(path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let rows = result.cells.iter().map(bench::ResultRow::from).collect();
        say(format!("experiment: {}", result.metadata.name))?;
        return summarize_results(rows, &mut say);
    }
    let emb = load_embeddings(path)?;
    say(format!("vocabulary: {}, dim: {}", emb.len(), emb.dim()))?;
    let sample: Vec<&str> = emb.vocab().iter().take(5).map(String::as_str).collect();
    say(format!("sample: {}", sample.join(", ")))?;
    if let Some(word) = &a.word {
        if !emb.contains(word) {
            return Err(CliError::Runtime(format!("{word:?} is not in the vocabulary")));
        }
        for (w, sim) in &emb.top_k_neighbors(word, a.top_k).entries {
            say(format!("{w}\t{sim:.4}"))?;
        }
    }
    Ok(())
}

fn summarize_results(rows: Vec<bench::ResultRow>, say: &mut impl FnMut(String) -> CliResult) -> CliResult {
    let failed = rows.iter().filter(|r| r.status == CellStatus::Failed).count();
    say(format!("cells: {} ({failed} failed)", rows.len()))?;
    let mut by_method: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        if let Some(e) = r.final_val_error {
            by_method.entry(r.method.to_string()).or_default().push(e);
        }
    }
    let mut best: Option<(String, f64)> = None;
    for (method, errs) in &by_method {
        let (mean, std) = bench::mean_std(errs);
        say(format!("{method}: mean val error {mean:.5} ± {std:.5} ({} cells)", errs.len()))?;
        if best.as_ref().is_none_or(|(_, b)| mean < *b) {
            best = Some((method.clone(), mean));
        }
    }
    if let Some((method, mean)) = best {
        say(format!("best method: {method} ({mean:.5})"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DEFAULT_SEED;

    #[test]
    fn seed_arg_parses() {
        assert_eq!("42".parse::<SeedArg>().unwrap(), SeedArg::Fixed(42));
        assert_eq!("random".parse::<SeedArg>().unwrap(), SeedArg::Random);
        assert!("x1".parse::<SeedArg>().is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["textaug", "augment", "--bogus"]), 1);
        assert_eq!(run(["textaug", "frobnicate"]), 1);
    }

    #[test]
    fn default_seed_matches_flag_default() {
        assert_eq!(DEFAULT_SEED.to_string(), "20190905");
    }

    #[test]
    fn identity_n0_copies_input() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        fs::write(&input, "text,label\nhello world,a\ngood bye,b\n").unwrap();
        let output = dir.path().join("out.jsonl");
        let args = ["textaug", "augment", "--method", "identity", "--n", "0", "--input"];
        let code = run(args.iter().map(|s| s.to_string()).chain([
            input.display().to_string(),
            "--output".into(),
            output.display().to_string(),
        ]));
        assert_eq!(code, 0);
        let ds = read_jsonl(&output, None).unwrap();
        assert_eq!(ds.texts().collect::<Vec<_>>(), ["hello world", "good bye"]);
    }

    #[test]
    fn missing_embeddings_file_is_runtime_error() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        fs::write(&input, "text,label\nhello world,a\n").unwrap();
        let output = dir.path().join("out.jsonl");
        let code = run([
            "textaug".to_string(),
            "augment".into(),
            "--method".into(),
            "embedding".into(),
            "--embeddings".into(),
            dir.path().join("nope.txt").display().to_string(),
            "--input".into(),
            input.display().to_string(),
            "--output".into(),
            output.display().to_string(),
        ]);
        assert_eq!(code, 2);
        assert!(!output.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
