//! Nearest neighbours and neighbour replacement with word vectors.
//!
//! Uses the given vector file (text or `.bin`), or builds synthetic vectors
//! over the bundled WordNet vocabulary.
//!
//!     cargo run --example embedding_neighbors -- [vectors.txt] [word]

use textaug::augment::{embedding_augment_traced, AugmentConfig};
use textaug::embeddings::{load_auto, EmbeddingModel};
use textaug::rng;
use textaug::synth::{generate_embeddings, CorpusSpec, EmbeddingSpec};
use textaug::wordnet::parse_wndb;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let (model, word): (EmbeddingModel, String) = match args.get(1) {
        Some(path) => (load_auto(path).expect("vector file"), args.get(2).cloned().unwrap_or_else(|| "good".into())),
        None => {
            let lex = parse_wndb(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wordnet")).expect("WordNet data");
            let inv = CorpusSpec::news_like(0, 11).inventory(&lex);
            let word = inv.classes[1][0].lemmas[0].clone();
            (generate_embeddings(&lex, &inv, &EmbeddingSpec::default()), word)
        }
    };
    println!("{} words, dim {}", model.len(), model.dim());

    println!("\nneighbours of {word}:");
    for (w, sim) in &model.top_k_neighbors(&word, 10).entries {
        println!("  {w:<24} {sim:.4}");
    }

    let text = format!("the {word} was seen by the {}", model.vocab()[model.len() / 2]);
    let cfg = AugmentConfig { p: 0.5, runs: 2, ..AugmentConfig::default() };
    println!("\n{text}");
    let mut r = rng::stream(cfg.seed);
    for _ in 0..3 {
        let (out, reps) = embedding_augment_traced(&model, &text, &cfg, &mut r);
        let swaps: Vec<String> = reps.iter().map(|r| format!("{}:{}->{}", r.position, r.from, r.to)).collect();
        println!("  -> {out}   [{}]", swaps.join(" "));
    }
}
