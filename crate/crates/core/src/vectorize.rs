//! Text representations: TFIDF (sparse), averaged word vectors (dense),
//! one-hot labels, and mixup on feature rows.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{tokenize, Dataset, TokenizedDoc};
use crate::embeddings::EmbeddingModel;
use crate::rng::{self, Stream};

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("cannot fit on an empty corpus")]
    EmptyCorpus,
    #[error("mixup needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Compressed sparse rows with sorted column indices per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsrMatrix {
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n_cols: usize) -> Self {
        CsrMatrix { n_cols, indptr: vec![0], indices: Vec::new(), values: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Appends a row; `entries` must be sorted by column.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (c, v) in entries {
            debug_assert!(c < self.n_cols);
            self.indices.push(c);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut out = CsrMatrix::new(self.n_cols);
        for &r in rows {
            let (idx, val) = self.row(r);
            out.push_row(idx.iter().copied().zip(val.iter().copied()));
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows(), self.n_cols));
        for r in 0..self.n_rows() {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                out[[r, c]] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Sparse(CsrMatrix),
    Dense(Array2<f64>),
}

impl Features {
    pub fn n_rows(&self) -> usize {
        match self {
            Features::Sparse(m) => m.n_rows(),
            Features::Dense(m) => m.nrows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Features::Sparse(m) => m.n_cols,
            Features::Dense(m) => m.ncols(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Features {
        match self {
            Features::Sparse(m) => Features::Sparse(m.select_rows(rows)),
            Features::Dense(m) => Features::Dense(m.select(ndarray::Axis(0), rows)),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Features::Sparse(m) => m.to_dense(),
            Features::Dense(m) => m.clone(),
        }
    }
}

/// Feature rows with their (possibly soft) label rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub features: Features,
    pub labels: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(features: Features, labels: Array2<f64>) -> Self {
        assert_eq!(features.n_rows(), labels.nrows(), "feature and label row counts differ");
        FeatureMatrix { features, labels }
    }

    pub fn n_rows(&self) -> usize {
        self.labels.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            features: self.features.select_rows(rows),
            labels: self.labels.select(ndarray::Axis(0), rows),
        }
    }

    /// Argmax of each label row, ties to the lowest class.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.labels.rows().into_iter().map(argmax).collect()
    }

    /// Sparse rows as `{"row","col","val"}` JSON lines, dense rows as CSV.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<(), VectorizeError> {
        let mut out = BufWriter::new(File::create(path)?);
        match &self.features {
            Features::Sparse(m) => {
                for r in 0..m.n_rows() {
                    let (idx, val) = m.row(r);
                    for (&c, &v) in idx.iter().zip(val) {
                        serde_json::to_writer(&mut out, &serde_json::json!({"row": r, "col": c, "val": v}))?;
                        out.write_all(b"\n")?;
                    }
                }
            }
            Features::Dense(m) => {
                for row in m.rows() {
                    let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(out, "{}", line.join(","))?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), n_classes));
    for (r, &l) in labels.iter().enumerate() {
        out[[r, l]] = 1.0;
    }
    out
}

/// Stable 64-bit fingerprint of a corpus (FNV-1a over texts and separators).
pub fn fingerprint<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut n = 0usize;
    for t in texts {
        for b in t.bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        n += 1;
    }
    format!("{h:016x}-{n}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub fingerprint: String,
}

impl TfidfModel {
    /// Fits on tokenized documents. Columns are the sorted vocabulary; idf is
    /// `ln((1 + N) / (1 + df)) + 1`.
    pub fn fit_tokens(docs: &[TokenizedDoc], fingerprint: String) -> Result<Self, VectorizeError> {
        if docs.is_empty() {
            return Err(VectorizeError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (col, (term, count)) in df.into_iter().enumerate() {
            vocabulary.insert(term.to_string(), col);
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
        Ok(TfidfModel { vocabulary, idf, fingerprint })
    }

    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str> + Clone) -> Result<Self, VectorizeError> {
        let fp = fingerprint(texts.clone());
        let docs: Vec<TokenizedDoc> = texts.into_iter().map(tokenize).collect();
        Self::fit_tokens(&docs, fp)
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    /// L2-normalized term-count × idf row; unseen terms are ignored and a
    /// document with no known term maps to the zero row.
    pub fn transform_doc(&self, doc: &TokenizedDoc) -> Vec<(usize, f64)> {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in &doc.tokens {
            if let Some(&c) = self.vocabulary.get(t) {
                *counts.entry(c).or_default() += 1.0;
            }
        }
        let mut row: Vec<(usize, f64)> = counts.into_iter().map(|(c, tf)| (c, tf * self.idf[c])).collect();
        row.sort_unstable_by_key(|&(c, _)| c);
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }

    pub fn transform_texts<'a>(&self, texts: impl IntoIterator<Item = &'a str>) -> CsrMatrix {
        let mut m = CsrMatrix::new(self.n_features());
        for t in texts {
            m.push_row(self.transform_doc(&tokenize(t)));
        }
        m
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VectorizeError> {
        let out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VectorizeError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn tfidf_fit(train: &Dataset) -> Result<TfidfModel, VectorizeError> {
    TfidfModel::fit(train.texts())
}

pub fn tfidf_transform(model: &TfidfModel, docs: &Dataset) -> FeatureMatrix {
    FeatureMatrix::new(
        Features::Sparse(model.transform_texts(docs.texts())),
        one_hot(&docs.labels(), docs.num_classes()),
    )
}

/// Mean of the in-vocabulary token vectors; zero vector if there are none.
pub fn embed_average(model: &EmbeddingModel, doc: &TokenizedDoc) -> Vec<f64> {
    let mut acc = vec![0.0f64; model.dim()];
    let mut n = 0usize;
    for t in &doc.tokens {
        if let Some(v) = model.vector(t) {
            for (a, &x) in acc.iter_mut().zip(v) {
                *a += f64::from(x);
            }
            n += 1;
        }
    }
    if n > 0 {
        for a in &mut acc {
            *a /= n as f64;
        }
    }
    acc
}

pub fn embed_dataset(model: &EmbeddingModel, docs: &Dataset) -> FeatureMatrix {
    let mut x = Array2::zeros((docs.len(), model.dim()));
    for (r, d) in docs.records.iter().enumerate() {
        let v = embed_average(model, &tokenize(&d.text));
        x.row_mut(r).assign(&ArrayView1::from(&v));
    }
    FeatureMatrix::new(Features::Dense(x), one_hot(&docs.labels(), docs.num_classes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixupConfig {
    pub alpha: f64,
    pub seed: u64,
    /// Restrict partners to rows with the same (hard) label.
    #[serde(default)]
    pub same_class_only: bool,
}

impl Default for MixupConfig {
    fn default() -> Self {
        MixupConfig { alpha: 0.2, seed: rng::DEFAULT_SEED, same_class_only: false }
    }
}

/// `Beta(alpha, alpha)` as `g1 / (g1 + g2)` with `g1, g2 ~ Gamma(alpha, 1)`.
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha must be positive");
    let g1 = gamma.sample(rng);
    let g2 = gamma.sample(rng);
    let sum = g1 + g2;
    if sum > 0.0 {
        (g1 / sum).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

fn mix_sparse(a: (&[usize], &[f64]), b: (&[usize], &[f64]), lam: f64) -> Vec<(usize, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.0.len() + b.0.len());
    while i < a.0.len() || j < b.0.len() {
        let ca = a.0.get(i).copied().unwrap_or(usize::MAX);
        let cb = b.0.get(j).copied().unwrap_or(usize::MAX);
        if ca == cb {
            out.push((ca, lam * a.1[i] + (1.0 - lam) * b.1[j]));
            i += 1;
            j += 1;
        } else if ca < cb {
            out.push((ca, lam * a.1[i]));
            i += 1;
        } else {
            out.push((cb, (1.0 - lam) * b.1[j]));
            j += 1;
        }
    }
    out
}

/// Row `i` of the output is `lambdas[i] * x_i + (1 - lambdas[i]) * x_partners[i]`,
/// applied identically to features and labels.
pub fn mix_rows(fm: &FeatureMatrix, partners: &[usize], lambdas: &[f64]) -> FeatureMatrix {
    let n = fm.n_rows();
    assert_eq!(partners.len(), n);
    assert_eq!(lambdas.len(), n);
    let features = match &fm.features {
        Features::Sparse(m) => {
            let mut out = CsrMatrix::new(m.n_cols);
            for i in 0..n {
                out.push_row(mix_sparse(m.row(i), m.row(partners[i]), lambdas[i]));
            }
            Features::Sparse(out)
        }
        Features::Dense(m) => {
            let mut out = m.clone();
            for i in 0..n {
                let lam = lambdas[i];
                let other = m.row(partners[i]);
                out.row_mut(i).zip_mut_with(&other, |x, &y| *x = lam * *x + (1.0 - lam) * y);
            }
            Features::Dense(out)
        }
    };
    let mut labels = fm.labels.clone();
    for i in 0..n {
        let lam = lambdas[i];
        let other = fm.labels.row(partners[i]);
        labels.row_mut(i).zip_mut_with(&other, |x, &y| *x = lam * *x + (1.0 - lam) * y);
    }
    FeatureMatrix { features, labels }
}

/// Partners from a shuffled permutation of the batch (or of each class, when
/// `same_class_only`), with a fresh `lambda ~ Beta(alpha, alpha)` per row.
pub fn mixup_with_rng(
    fm: &FeatureMatrix,
    alpha: f64,
    same_class_only: bool,
    rng: &mut Stream,
) -> Result<FeatureMatrix, VectorizeError> {
    let n = fm.n_rows();
    if n < 2 {
        return Err(VectorizeError::TooFewRows(n));
    }
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(VectorizeError::InvalidAlpha(alpha));
    }
    let partners = if same_class_only {
        let labels = fm.hard_labels();
        let mut partners = vec![0; n];
        for c in 0..fm.n_classes() {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            let mut shuffled = members.clone();
            shuffled.shuffle(rng);
            for (m, p) in members.into_iter().zip(shuffled) {
                partners[m] = p;
            }
        }
        partners
    } else {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        p
    };
    let lambdas: Vec<f64> = (0..n).map(|_| sample_beta(alpha, rng)).collect();
    Ok(mix_rows(fm, &partners, &lambdas))
}

/// Precomputed mixup of a whole matrix, seeded from `cfg.seed`.
pub fn mixup_batch(fm: &FeatureMatrix, cfg: &MixupConfig) -> Result<FeatureMatrix, VectorizeError> {
    let mut stream = rng::labeled_stream(cfg.seed, "mixup");
    mixup_with_rng(fm, cfg.alpha, cfg.same_class_only, &mut stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(texts: &[&str]) -> Dataset {
        use crate::corpus::{Document, Origin};
        let records = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document { id: i as u64, text: t.to_string(), label: i % 2, origin: Origin::Original })
            .collect();
        Dataset::new(records, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn single_doc_idf_is_one() {
        let m = tfidf_fit(&ds(&["a b"])).unwrap();
        assert_eq!(m.idf, vec![1.0, 1.0]);
    }

    #[test]
    fn two_doc_idf_by_hand() {
        let m = tfidf_fit(&ds(&["x y", "x"])).unwrap();
        assert_eq!(m.vocabulary["x"], 0);
        assert!((m.idf[0] - 1.0).abs() < 1e-15);
        assert!((m.idf[1] - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn empty_corpus_fails() {
        assert!(matches!(TfidfModel::fit(std::iter::empty::<&str>()), Err(VectorizeError::EmptyCorpus)));
    }

    #[test]
    fn transform_norms_and_unseen() {
        let train = ds(&["the cat sat", "the dog sat down", "a cat"]);
        let m = tfidf_fit(&train).unwrap();
        let fm = tfidf_transform(&m, &train);
        let Features::Sparse(x) = &fm.features else { unreachable!() };
        for r in 0..x.n_rows() {
            let n: f64 = x.row(r).1.iter().map(|v| v * v).sum();
            assert!((n.sqrt() - 1.0).abs() < 1e-6);
        }
        let unseen = m.transform_texts(["zebra quagga"]);
        assert_eq!(unseen.nnz(), 0);
        assert_eq!(unseen.n_rows(), 1);
    }

    #[test]
    fn tfidf_json_round_trip() {
        let m = tfidf_fit(&ds(&["one two", "two three"])).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        m.save(f.path()).unwrap();
        assert_eq!(TfidfModel::load(f.path()).unwrap(), m);
    }

    #[test]
    fn embed_average_cases() {
        let model = EmbeddingModel::from_pairs(vec![
            ("a".to_string(), vec![1.0, 2.0, 3.0]),
            ("b".to_string(), vec![3.0, -2.0, 0.5]),
        ])
        .unwrap();
        assert_eq!(embed_average(&model, &tokenize("a")), vec![1.0, 2.0, 3.0]);
        assert_eq!(embed_average(&model, &tokenize("q r")), vec![0.0, 0.0, 0.0]);
        assert_eq!(embed_average(&model, &tokenize("a b zz")), vec![2.0, 0.0, 1.75]);
    }

    #[test]
    fn mixup_endpoints() {
        let fm = FeatureMatrix::new(Features::Dense(array![[1.0, 0.0], [0.0, 1.0]]), array![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(mix_rows(&fm, &[1, 0], &[1.0, 1.0]), fm);
        let half = mix_rows(&fm, &[1, 0], &[0.5, 0.5]);
        assert_eq!(half.features.to_dense().row(0).to_vec(), vec![0.5, 0.5]);
        assert_eq!(half.labels.row(0).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn sparse_and_dense_mixing_agree() {
        let train = ds(&["red fish", "blue fish swim", "one fish two fish", "red red blue"]);
        let m = tfidf_fit(&train).unwrap();
        let sparse = tfidf_transform(&m, &train);
        let dense = FeatureMatrix::new(Features::Dense(sparse.features.to_dense()), sparse.labels.clone());
        let partners = [2, 3, 0, 1];
        let lambdas = [0.1, 0.7, 0.5, 0.93];
        let a = mix_rows(&sparse, &partners, &lambdas);
        let b = mix_rows(&dense, &partners, &lambdas);
        let diff = (&a.features.to_dense() - &b.features.to_dense()).mapv(f64::abs).sum();
        assert!(diff < 1e-12);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn mixup_errors() {
        let fm = FeatureMatrix::new(Features::Dense(array![[1.0]]), array![[1.0]]);
        assert!(matches!(mixup_batch(&fm, &MixupConfig::default()), Err(VectorizeError::TooFewRows(1))));
        let fm2 = FeatureMatrix::new(Features::Dense(array![[1.0], [2.0]]), array![[1.0], [1.0]]);
        let bad = MixupConfig { alpha: 0.0, ..Default::default() };
        assert!(matches!(mixup_batch(&fm2, &bad), Err(VectorizeError::InvalidAlpha(_))));
    }

    #[test]
    fn same_class_mixing_keeps_hard_labels() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| (i * 3 + j) as f64);
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let fm = FeatureMatrix::new(Features::Dense(x), one_hot(&labels, 4));
        let cfg = MixupConfig { same_class_only: true, ..Default::default() };
        let out = mixup_batch(&fm, &cfg).unwrap();
        assert_eq!(out.labels, fm.labels);
    }
}
