//! Round-trip translation through offline dictionaries, or through a live
//! JSON endpoint when one is given.
//!
//!     cargo run --example round_trip_translation
//!     cargo run --example round_trip_translation -- http://localhost:5000/translate

use std::collections::BTreeMap;
use std::sync::Arc;

use textaug::augment::{
    rtt_augment, HttpBackend, HttpBackendConfig, MockBackend, RetryPolicy, RttAugmenter, TranslationBackend,
};
use textaug::corpus::{build_augmented, Dataset, Document, Origin};

fn table(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn main() {
    let backend: Arc<dyn TranslationBackend> = match std::env::args().nth(1) {
        Some(url) => Arc::new(HttpBackend::new(HttpBackendConfig::new(url)).expect("client")),
        None => Arc::new(
            MockBackend::new()
                .with_table("fr", table(&[("car", "voiture"), ("auto", "voiture"), ("big", "grand"), ("large", "grand")]))
                .with_table("de", table(&[("car", "wagen"), ("automobile", "wagen"), ("big", "gross"), ("huge", "gross")])),
        ),
    };
    let retry = RetryPolicy::default();
    for pivot in ["fr", "de"] {
        let rec = rtt_augment(backend.as_ref(), "a big car", pivot, &retry).expect("translation");
        println!("{pivot}: {:?} -> {:?} -> {:?}", rec.source, rec.forward, rec.back);
    }

    let docs = ["the car is large", "a huge auto"]
        .iter()
        .enumerate()
        .map(|(i, t)| Document { id: i as u64, text: t.to_string(), label: i, origin: Origin::Original })
        .collect();
    let ds = Dataset::new(docs, vec!["a".into(), "b".into()]).unwrap();
    let aug = RttAugmenter::new(backend, vec!["fr".into(), "de".into()], retry).unwrap();
    let out = build_augmented(&ds, &aug, 2, 0).expect("augmentation");
    println!();
    for d in &out.records {
        println!("{:?}\t{}", d.origin, d.text);
    }
}
