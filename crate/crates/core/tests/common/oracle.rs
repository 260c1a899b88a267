//! Reference implementations shared by the oracle and acceptance tests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Seek, SeekFrom};
use std::path::Path;

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textaug::embeddings::EmbeddingModel;
use textaug::learn::Model;
use textaug::vectorize::{one_hot, Features};
use textaug::wordnet::{Pos, SynonymLexicon};

/// Minimal WNDB reader: index lines give the synset offsets as their last
/// `synset_cnt` fields; each offset is a byte position in the data file.
pub struct RefWordNet {
    pub index: BTreeMap<String, Vec<u64>>,
    data: File,
}

impl RefWordNet {
    pub fn open(dir: &Path, suffix: &str) -> Self {
        let mut index = BTreeMap::new();
        let f = BufReader::new(File::open(dir.join(format!("index.{suffix}"))).unwrap());
        for line in f.lines() {
            let line = line.unwrap();
            if line.starts_with("  ") || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(' ').filter(|s| !s.is_empty()).collect();
            let n: usize = fields[2].parse().unwrap();
            let offsets = fields[fields.len() - n..].iter().map(|o| o.parse().unwrap()).collect();
            index.insert(fields[0].to_lowercase(), offsets);
        }
        let data = File::open(dir.join(format!("data.{suffix}"))).unwrap();
        RefWordNet { index, data }
    }

    pub fn synset_words(&mut self, offset: u64) -> Vec<String> {
        self.data.seek(SeekFrom::Start(offset)).unwrap();
        let mut line = String::new();
        BufReader::new(&mut self.data).read_line(&mut line).unwrap();
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields[0].parse::<u64>().unwrap(), offset);
        let count = usize::from_str_radix(fields[3], 16).unwrap();
        (0..count).map(|i| fields[4 + 2 * i].to_lowercase()).collect()
    }

    pub fn synonyms(&mut self, word: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let offsets = self.index.get(word).cloned().unwrap_or_default();
        for off in offsets {
            for w in self.synset_words(off) {
                if w != word && !out.contains(&w) {
                    out.push(w);
                }
            }
        }
        out
    }
}

pub fn random_model(rng: &mut ChaCha8Rng) -> EmbeddingModel {
    let n = rng.random_range(2..40);
    let dim = rng.random_range(1..8);
    let pairs = (0..n).map(|i| {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        (format!("w{i}"), v)
    });
    EmbeddingModel::from_pairs(pairs.collect::<Vec<_>>()).unwrap()
}

pub fn brute_force(model: &EmbeddingModel, word: &str, k: usize) -> Vec<(String, f64)> {
    let q: Vec<f64> = model.vector(word).unwrap().iter().map(|&x| x as f64).collect();
    let mut all = Vec::new();
    for (i, w) in model.vocab().iter().enumerate() {
        if w == word {
            continue;
        }
        let v: Vec<f64> = model.row(i).iter().map(|&x| x as f64).collect();
        let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
        let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let sim = if nq == 0.0 || nv == 0.0 { 0.0 } else { dot / (nq * nv) };
        all.push((i, w.clone(), sim));
    }
    // Stable sort keeps vocabulary order among equal similarities.
    all.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    all.into_iter().take(k).map(|(_, w, s)| (w, s)).collect()
}

pub fn finite_difference_check(model: &Model, x: &Features, y: &Array2<f64>) -> f64 {
    let (_, grad) = model.loss_and_grad(x, y).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let analytic: Vec<Vec<f64>> = grad.params().iter().map(|p| p.to_vec()).collect();
    for (t, tensor) in analytic.iter().enumerate() {
        for (j, &a) in tensor.iter().enumerate() {
            let mut plus = model.clone();
            plus.params_mut()[t][j] += h;
            let mut minus = model.clone();
            minus.params_mut()[t][j] -= h;
            let lp = plus.loss_and_grad(x, y).unwrap().0;
            let lm = minus.loss_and_grad(x, y).unwrap().0;
            let numeric = (lp - lm) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if (a - numeric).abs() > 1e-9 {
                worst = worst.max(rel);
            }
        }
    }
    worst
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Features, Array2<f64>) {
    let x = Array2::from_shape_fn((10, 5), |_| rng.random_range(-2.0..2.0));
    let labels: Vec<usize> = (0..10).map(|_| rng.random_range(0..3)).collect();
    (Features::Dense(x), one_hot(&labels, 3))
}

pub fn blobs(rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<usize>) {
    let mut x = Array2::zeros((200, 2));
    let mut labels = Vec::new();
    for i in 0..200 {
        let c = i % 2;
        let centre = if c == 0 { [-3.0, -1.0] } else { [3.0, 1.0] };
        x[[i, 0]] = centre[0] + rng.random_range(-1.5..1.5);
        x[[i, 1]] = centre[1] + rng.random_range(-1.5..1.5);
        labels.push(c);
    }
    (x, labels)
}

/// Perceptron; converging within the epoch budget certifies separability.
pub fn perceptron_separates(x: &Array2<f64>, labels: &[usize]) -> bool {
    let mut w = [0.0f64; 3];
    for _ in 0..1000 {
        let mut mistakes = 0;
        for (i, &l) in labels.iter().enumerate() {
            let y = if l == 1 { 1.0 } else { -1.0 };
            let s = w[0] * x[[i, 0]] + w[1] * x[[i, 1]] + w[2];
            if y * s <= 0.0 {
                w[0] += y * x[[i, 0]];
                w[1] += y * x[[i, 1]];
                w[2] += y;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return true;
        }
    }
    false
}


/// Synonym mismatches between the library and the reference reader on
/// `sample` random words per part of speech, plus lemma-count and
/// sense-order disagreements.
pub fn wordnet_mismatches(lex: &SynonymLexicon, dir: &Path, sample: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for (pos, suffix) in [(Pos::Noun, "noun"), (Pos::Verb, "verb")] {
        let mut reference = RefWordNet::open(dir, suffix);
        if lex.lemma_count(pos) != reference.index.len() {
            bad.push(format!("{pos} lemma count {} vs {}", lex.lemma_count(pos), reference.index.len()));
        }
        let words: Vec<String> = reference.index.keys().cloned().collect();
        for w in words.choose_multiple(&mut rng, sample) {
            if lex.synonyms(w, pos) != reference.synonyms(w) {
                bad.push(format!("{w} ({pos}) synonyms"));
            }
            let ours: Vec<u64> = lex.synsets_for(w, pos).map(|s| s.offset).collect();
            if ours != reference.index[w.as_str()] {
                bad.push(format!("{w} ({pos}) sense order"));
            }
        }
    }
    bad
}
