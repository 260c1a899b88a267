//! Library outputs checked against independently written reference code.

mod common;

use std::path::Path;

use approx::assert_relative_eq;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textaug::corpus::tokenize;
use textaug::embeddings::{load_binary_format, load_text_format, EmbeddingModel};
use textaug::learn::{adadelta_step, train, AdadeltaState, Model, ModelKind, SoftmaxModel, TrainConfig};
use textaug::vectorize::{one_hot, Features, FeatureMatrix, TfidfModel};

use common::oracle::{self, blobs, brute_force, finite_difference_check, perceptron_separates, random_instance, random_model};

// ---------------------------------------------------------------- WordNet

#[test]
fn wordnet_matches_reference_reader() {
    let bad = oracle::wordnet_mismatches(&common::lexicon(), &common::wordnet_dir(), 250, 500);
    assert!(bad.is_empty(), "{bad:?}");
}

// -------------------------------------------------------------- tokenizer

/// The stated rule, written out character by character.
fn reference_tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        let chars: Vec<char> = current.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && !chars[start].is_alphanumeric() {
            start += 1;
        }
        while end > start && !chars[end - 1].is_alphanumeric() {
            end -= 1;
        }
        let token: String = chars[start..end].iter().collect::<String>().to_lowercase();
        if !token.is_empty() {
            tokens.push(token);
        }
        current.clear();
    };
    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else {
            current.push(c);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

#[test]
fn tokenizer_matches_reference_rule() {
    let cases = [
        "The dog barks.",
        "",
        "@user :) http://x.co great!!",
        "  multiple\tspaces\nand\u{00a0}nbsp ",
        "\"quoted,\" (parens) [brackets] ...ellipsis...",
        "ÉCOLE café naïve ¿qué? «dit»",
        "don't stop-believing 3.14 #tag",
    ];
    for c in cases {
        assert_eq!(tokenize(c).tokens, reference_tokenize(c), "{c:?}");
    }
    assert_eq!(tokenize("@user :) http://x.co great!!").tokens, ["user", "http://x.co", "great"]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let alphabet: Vec<char> = "aZé9 .,!?:)(-'\t\n_@#".chars().collect();
    for _ in 0..500 {
        let len = rng.random_range(0..40);
        let s: String = (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
        assert_eq!(tokenize(&s).tokens, reference_tokenize(&s), "{s:?}");
    }
}

// ------------------------------------------------------------- embeddings

#[test]
fn top_k_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for _ in 0..200 {
        let model = random_model(&mut rng);
        let word = model.vocab()[rng.random_range(0..model.len())].clone();
        let k = rng.random_range(1..=model.len() + 2);
        let got = model.top_k_neighbors(&word, k);
        let want = brute_force(&model, &word, k);
        assert_eq!(got.len(), want.len());
        for ((gw, gs), (ww, ws)) in got.entries.iter().zip(&want) {
            assert_eq!(gw, ww);
            assert!((gs - ws).abs() < 1e-9);
        }
    }
}

#[test]
fn top_k_ties_keep_vocabulary_order() {
    let pairs = vec![
        ("q".to_string(), vec![1.0, 0.0]),
        ("b".to_string(), vec![2.0, 0.0]),
        ("a".to_string(), vec![2.0, 0.0]),
        ("c".to_string(), vec![0.0, 1.0]),
    ];
    let m = EmbeddingModel::from_pairs(pairs).unwrap();
    let nn = m.top_k_neighbors("q", 3);
    let got: Vec<&str> = nn.words().collect();
    assert_eq!(got, ["b", "a", "c"]);
}

/// Writes the binary format byte by byte, independent of the library writer.
fn write_binary_by_hand(path: &Path, words: &[(&str, Vec<f32>)]) {
    let mut bytes = format!("{} {}\n", words.len(), words[0].1.len()).into_bytes();
    for (w, v) in words {
        bytes.extend_from_slice(w.as_bytes());
        bytes.push(b' ');
        for x in v {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        bytes.push(b'\n');
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn binary_and_text_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words: Vec<(String, Vec<f32>)> = (0..50)
        .map(|i| (format!("word{i}"), (0..7).map(|_| rng.random_range(-2.0f32..2.0)).collect()))
        .collect();
    let refs: Vec<(&str, Vec<f32>)> = words.iter().map(|(w, v)| (w.as_str(), v.clone())).collect();
    let bin = dir.path().join("v.bin");
    write_binary_by_hand(&bin, &refs);
    let txt = dir.path().join("v.txt");
    let body: Vec<String> = words
        .iter()
        .map(|(w, v)| format!("{w} {}", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")))
        .collect();
    std::fs::write(&txt, format!("{} 7\n{}\n", words.len(), body.join("\n"))).unwrap();
    let a = load_binary_format(&bin).unwrap();
    let b = load_text_format(&txt).unwrap();
    assert_eq!(a.vocab(), b.vocab());
    for (w, v) in &words {
        assert_eq!(a.vector(w).unwrap(), v.as_slice());
        assert_eq!(b.vector(w).unwrap(), v.as_slice());
    }
}

// ------------------------------------------------------------------ TFIDF

#[test]
fn tfidf_three_document_hand_computation() {
    let docs = ["apple banana", "apple cherry", "apple banana banana"];
    let model = TfidfModel::fit(docs.iter().copied()).unwrap();
    assert_eq!(model.vocabulary.keys().collect::<Vec<_>>(), ["apple", "banana", "cherry"]);
    // N = 3; df = 3, 2, 1.
    let idf_apple = (4.0f64 / 4.0).ln() + 1.0;
    let idf_banana = (4.0f64 / 3.0).ln() + 1.0;
    let idf_cherry = (4.0f64 / 2.0).ln() + 1.0;
    assert_relative_eq!(model.idf[0], idf_apple, epsilon = 1e-12);
    assert_relative_eq!(model.idf[1], idf_banana, epsilon = 1e-12);
    assert_relative_eq!(model.idf[2], idf_cherry, epsilon = 1e-12);
    let expected = [
        [idf_apple, idf_banana, 0.0],
        [idf_apple, 0.0, idf_cherry],
        [idf_apple, 2.0 * idf_banana, 0.0],
    ];
    let dense = model.transform_texts(docs.iter().copied()).to_dense();
    for (r, row) in expected.iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..3 {
            assert!((dense[[r, c]] - row[c] / norm).abs() < 1e-9, "row {r} col {c}");
        }
    }
}

// ------------------------------------------------------- gradients, optimizer

#[test]
fn softmax_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let (x, y) = random_instance(&mut rng);
        let mut m = SoftmaxModel::zeros(5, 3);
        m.weights.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        m.bias.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        assert!(finite_difference_check(&Model::Softmax(m), &x, &y) < 1e-4);
    }
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let (x, y) = random_instance(&mut rng);
        let mut stream = textaug::rng::stream(rng.random());
        let m = Model::new(ModelKind::Mlp { hidden: 4 }, 5, 3, &mut stream);
        assert!(finite_difference_check(&m, &x, &y) < 1e-4);
    }
}

#[test]
fn adadelta_matches_reference_recurrence() {
    let (rho, eps) = (0.95f64, 1e-6f64);
    let mut state = AdadeltaState::new(&[1], rho, eps);
    let mut p = vec![0.0];
    let (mut eg, mut ex, mut x) = (0.0f64, 0.0f64, 0.0f64);
    for step in 0..50 {
        let g = if step % 7 == 3 { -0.5 } else { 1.0 };
        adadelta_step(&mut state, &mut [&mut p], &[&[g]]).unwrap();
        eg = rho * eg + (1.0 - rho) * g * g;
        let dx = -((ex + eps).sqrt() / (eg + eps).sqrt()) * g;
        ex = rho * ex + (1.0 - rho) * dx * dx;
        x += dx;
        assert!((p[0] - x).abs() < 1e-12, "step {step}");
    }
}

// ------------------------------------------------------------ separability

#[test]
fn separable_blobs_are_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (x, labels) = blobs(&mut rng);
    assert!(perceptron_separates(&x, &labels));
    let fm = FeatureMatrix::new(Features::Dense(x), one_hot(&labels, 2));
    let (_, log) = train(&TrainConfig::new(ModelKind::Softmax, 200, 1), &fm, &fm).unwrap();
    assert!(log.last().unwrap().train_error <= 0.02);
}
