//! Writes a synthetic labelled corpus, matching word vectors and offline
//! translation dictionaries, ready for the `textaug` CLI.
//!
//!     cargo run --release --example generate_synthetic -- out_dir [news|sentiment] [n_docs]
//!     textaug augment --input out_dir/corpus.csv --output aug.jsonl --method rtt \
//!         --pivot fr --mock-dict fr=out_dir/fr.json

use std::path::PathBuf;

use textaug::corpus::write_csv;
use textaug::synth::{generate_corpus, generate_embeddings, pivot_tables, CorpusSpec, EmbeddingSpec};
use textaug::wordnet::parse_wndb;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map(String::as_str).unwrap_or("synthetic"));
    let n_docs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let spec = match args.get(1).map(String::as_str) {
        Some("sentiment") => CorpusSpec::sentiment_like(n_docs, 11),
        _ => CorpusSpec::news_like(n_docs, 11),
    };
    std::fs::create_dir_all(&out).unwrap();

    let lex = parse_wndb(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wordnet")).expect("WordNet data");
    let inv = spec.inventory(&lex);
    let corpus = generate_corpus(&inv, &spec);
    write_csv(&corpus, out.join("corpus.csv")).unwrap();
    let emb = generate_embeddings(&lex, &inv, &EmbeddingSpec::default());
    emb.write_text_format(out.join("vectors.txt")).unwrap();
    emb.write_binary_format(out.join("vectors.bin")).unwrap();
    for (lang, table) in pivot_tables(&inv) {
        std::fs::write(out.join(format!("{lang}.json")), serde_json::to_string_pretty(&table).unwrap()).unwrap();
    }

    println!("{} documents ({}), labels {:?}", corpus.len(), spec.label_names.join("/"), corpus.label_counts());
    println!("{} vectors of dim {}", emb.len(), emb.dim());
    println!("written to {}", out.display());
    for d in corpus.records.iter().take(3) {
        println!("  [{}] {}", corpus.label_names[d.label], d.text);
    }
}
