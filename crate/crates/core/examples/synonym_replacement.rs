//! WordNet synonym replacement on a few sentences.
//!
//!     cargo run --example synonym_replacement -- "the car stopped near the house"

use textaug::augment::{synonym_augment, AugmentConfig};
use textaug::rng;
use textaug::wordnet::{parse_wndb, Pos};

fn main() {
    let lex = parse_wndb(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wordnet")).expect("WordNet data");
    let mut texts: Vec<String> = std::env::args().skip(1).collect();
    if texts.is_empty() {
        texts = vec![
            "the car stopped near the house".into(),
            "stocks fell as the company reported a loss".into(),
            "she will buy a new computer".into(),
        ];
    }
    println!("car (noun): {}", lex.synonyms("car", Pos::Noun).join(", "));

    let cfg = AugmentConfig { p: 0.5, ..AugmentConfig::default() };
    for (i, text) in texts.iter().enumerate() {
        println!("\n{text}");
        let mut r = rng::record_stream(cfg.seed, i as u64);
        for _ in 0..4 {
            println!("  -> {}", synonym_augment(&lex, text, &cfg, &mut r));
        }
    }
}
