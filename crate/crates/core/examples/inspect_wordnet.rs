//! Counts and sense-ordered lookups in the WordNet database.
//!
//!     cargo run --example inspect_wordnet -- bank run

use textaug::wordnet::{parse_wndb, Pos};

fn main() {
    let lex = parse_wndb(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wordnet")).expect("WordNet data");
    for pos in Pos::ALL {
        println!("{pos}: {} lemmas, {} synsets", lex.lemma_count(pos), lex.synset_count(pos));
    }
    let mut words: Vec<String> = std::env::args().skip(1).collect();
    if words.is_empty() {
        words = vec!["bank".into(), "run".into()];
    }
    for w in &words {
        for pos in Pos::ALL {
            let senses: Vec<_> = lex.synsets_for(w, pos).collect();
            if senses.is_empty() {
                continue;
            }
            println!("\n{w} ({pos}), {} senses", senses.len());
            for s in senses.iter().take(5) {
                println!("  {:08} {}", s.offset, s.lemmas.join(", "));
            }
            println!("  synonyms: {}", lex.synonyms(w, pos).join(", "));
        }
    }
}
