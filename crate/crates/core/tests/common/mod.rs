#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use textaug::wordnet::{parse_wndb, SynonymLexicon};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn wordnet_dir() -> PathBuf {
    repo_root().join("data/wordnet")
}

pub fn configs_dir() -> PathBuf {
    repo_root().join("configs")
}

pub fn lexicon() -> Arc<SynonymLexicon> {
    static LEX: OnceLock<Arc<SynonymLexicon>> = OnceLock::new();
    LEX.get_or_init(|| Arc::new(parse_wndb(wordnet_dir()).expect("vendored WordNet parses"))).clone()
}

use ndarray::Array2;
use textaug::vectorize::{mix_rows, FeatureMatrix, Features};

/// Checks one mixup batch against the convex-combination algebra. Returns
/// the first violated property.
pub fn mixup_violation(fm: &FeatureMatrix, partners: &[usize], lambdas: &[f64], tol: f64) -> Option<String> {
    let mixed = mix_rows(fm, partners, lambdas);
    let x = fm.features.to_dense();
    let mx = mixed.features.to_dense();
    let close = |a: f64, b: f64| (a - b).abs() <= tol;
    for i in 0..fm.n_rows() {
        let (lam, j) = (lambdas[i], partners[i]);
        for c in 0..x.ncols() {
            let (a, b, m) = (x[[i, c]], x[[j, c]], mx[[i, c]]);
            if !close(m, lam * a + (1.0 - lam) * b) {
                return Some(format!("row {i} col {c}: not the stated combination"));
            }
            if m < a.min(b) - tol || m > a.max(b) + tol {
                return Some(format!("row {i} col {c}: outside the segment"));
            }
            if lam == 1.0 && !close(m, a) {
                return Some(format!("row {i}: lambda 1 is not the identity"));
            }
            if lam == 0.5 && !close(m, (a + b) / 2.0) {
                return Some(format!("row {i}: lambda 0.5 is not the midpoint"));
            }
        }
        let sum: f64 = mixed.labels.row(i).sum();
        if !close(sum, 1.0) {
            return Some(format!("row {i}: label mass {sum}"));
        }
    }
    None
}

pub fn dense(rows: usize, cols: usize, f: impl FnMut((usize, usize)) -> f64) -> Features {
    Features::Dense(Array2::from_shape_fn((rows, cols), f))
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub csv: PathBuf,
    pub vectors: PathBuf,
    pub fr: PathBuf,
    pub de: PathBuf,
}

/// A small news-like corpus with matching vectors and mock dictionaries.
pub fn fixture(n_docs: usize) -> Fixture {
    use textaug::synth::{generate_corpus, generate_embeddings, pivot_tables, CorpusSpec, EmbeddingSpec};
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec::news_like(n_docs, 11);
    let inv = spec.inventory(&lexicon());
    let ds = generate_corpus(&inv, &spec);
    let csv = dir.path().join("corpus.csv");
    textaug::corpus::write_csv(&ds, &csv).unwrap();
    let emb = generate_embeddings(&lexicon(), &inv, &EmbeddingSpec { distractors: 500, ..EmbeddingSpec::default() });
    let vectors = dir.path().join("vectors.txt");
    emb.write_text_format(&vectors).unwrap();
    let tables = pivot_tables(&inv);
    let fr = dir.path().join("fr.json");
    let de = dir.path().join("de.json");
    std::fs::write(&fr, serde_json::to_string(&tables["fr"]).unwrap()).unwrap();
    std::fs::write(&de, serde_json::to_string(&tables["de"]).unwrap()).unwrap();
    Fixture { dir, csv, vectors, fr, de }
}
