//! mixup on TFIDF features: Beta draws, mixed rows and soft labels.

use textaug::corpus::{Dataset, Document, Origin};
use textaug::rng;
use textaug::vectorize::{mixup_with_rng, sample_beta, tfidf_fit, tfidf_transform};

fn main() {
    let texts = [("goal scored in the final match", 0), ("the team won the cup", 0), ("shares rose after earnings", 1), ("the bank cut interest rates", 1)];
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, (t, l))| Document { id: i as u64, text: t.to_string(), label: *l, origin: Origin::Original })
        .collect();
    let ds = Dataset::new(docs, vec!["sports".into(), "business".into()]).unwrap();
    let tfidf = tfidf_fit(&ds).unwrap();
    let fm = tfidf_transform(&tfidf, &ds);

    let mut r = rng::stream(1);
    for alpha in [0.2, 1.0, 4.0] {
        let draws: Vec<String> = (0..6).map(|_| format!("{:.3}", sample_beta(alpha, &mut r))).collect();
        println!("Beta({alpha}, {alpha}): {}", draws.join(" "));
    }

    for same_class_only in [false, true] {
        let mixed = mixup_with_rng(&fm, 0.4, same_class_only, &mut r).unwrap();
        let x = mixed.features.to_dense();
        println!("\nsame_class_only = {same_class_only}");
        for i in 0..mixed.n_rows() {
            let y = mixed.labels.row(i);
            let nnz = x.row(i).iter().filter(|v| **v != 0.0).count();
            println!("  row {i}: labels [{:.3}, {:.3}], {nnz} non-zero features", y[0], y[1]);
        }
    }
}
