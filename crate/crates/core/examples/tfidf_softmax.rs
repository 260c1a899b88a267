//! TFIDF features and a softmax classifier trained with ADADELTA on a
//! synthetic news corpus.

use textaug::corpus::{split, SplitSpec};
use textaug::learn::{train, ModelKind, TrainConfig};
use textaug::synth::{generate_corpus, CorpusSpec};
use textaug::vectorize::{tfidf_fit, tfidf_transform};
use textaug::wordnet::parse_wndb;

fn main() {
    let lex = parse_wndb(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wordnet")).expect("WordNet data");
    let spec = CorpusSpec::news_like(6000, 11);
    let data = generate_corpus(&spec.inventory(&lex), &spec);
    let (tr, va) = split(&data, &SplitSpec { train_size: 2000, val_size: 4000, seed: 0 }).unwrap();

    let tfidf = tfidf_fit(&tr).unwrap();
    println!("vocabulary {} terms", tfidf.vocabulary.len());
    let (x, v) = (tfidf_transform(&tfidf, &tr), tfidf_transform(&tfidf, &va));
    let (_, log) = train(&TrainConfig::new(ModelKind::Softmax, 20, 0), &x, &v).unwrap();
    println!("epoch  train_loss  val_loss  val_error");
    for e in log.epochs.iter().step_by(2) {
        println!("{:>5}  {:>10.4}  {:>8.4}  {:>9.4}", e.epoch, e.train_loss, e.val_loss, e.val_error);
    }
}
