//! Seeded stand-in corpora and word vectors built on a WordNet lexicon.
//!
//! Labelled short-text benchmarks and pretrained vectors are large downloads.
//! This module generates desk-scale substitutes with the property that makes
//! global augmentation interesting: documents are written with *concepts*
//! (WordNet synsets), each rendered through one of its lemmas with a skewed
//! frequency, so a small training sample leaves many lemma variants unseen.
//!
//! * A topical corpus draws content words mostly from its class's concepts,
//!   partly from a shared pool and from other classes, mixed with function
//!   words, with a fraction of labels flipped.
//! * The matching embedding file places lemmas of one concept close together
//!   and concepts of one class along a common direction, padded with
//!   unrelated WordNet words.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document, Origin};
use crate::embeddings::EmbeddingModel;
use crate::rng;
use crate::wordnet::{Pos, SynonymLexicon};

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "on", "for", "with", "that", "this", "is", "was", "it", "by", "at", "from", "as",
    "its", "their", "has", "have", "will", "after", "over", "new", "more", "than", "about", "into", "out",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub pos: Pos,
    pub offset: u64,
    pub lemmas: Vec<String>,
}

/// Concepts assigned to each class plus a pool shared by all classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptInventory {
    pub classes: Vec<Vec<Concept>>,
    pub shared: Vec<Concept>,
}

impl ConceptInventory {
    pub fn all(&self) -> impl Iterator<Item = &Concept> {
        self.classes.iter().flatten().chain(&self.shared)
    }

    pub fn words(&self) -> HashSet<&str> {
        self.all().flat_map(|c| c.lemmas.iter().map(String::as_str)).collect()
    }
}

fn plain_word(w: &str) -> bool {
    w.len() >= 3 && w.chars().all(|c| c.is_ascii_lowercase())
}

/// Synsets usable as unambiguous concepts: 2 to 4 plain single-word lemmas,
/// each of which has this synset as its first sense, and no lemma shared
/// with another chosen concept. Sorted by (pos, offset).
pub fn candidate_concepts(lexicon: &SynonymLexicon) -> Vec<Concept> {
    let mut out = Vec::new();
    let mut used: HashSet<&str> = HashSet::new();
    let function: HashSet<&str> = FUNCTION_WORDS.iter().copied().collect();
    let mut synsets: Vec<_> = lexicon.synsets().iter().collect();
    synsets.sort_by_key(|s| (s.pos, s.offset));
    for s in synsets {
        if !(2..=4).contains(&s.lemmas.len()) || !s.lemmas.iter().all(|l| plain_word(l)) {
            continue;
        }
        let primary = s.lemmas.iter().all(|l| {
            lexicon.synsets_for(l, s.pos).next().map(|first| first.offset) == Some(s.offset)
                && Pos::ALL.iter().all(|&p| p == s.pos || lexicon.sense_count(l, p) == 0)
        });
        if !primary || s.lemmas.iter().any(|l| used.contains(l.as_str()) || function.contains(l.as_str())) {
            continue;
        }
        used.extend(s.lemmas.iter().map(String::as_str));
        out.push(Concept { pos: s.pos, offset: s.offset, lemmas: s.lemmas.clone() });
    }
    out
}

pub fn select_concepts(
    lexicon: &SynonymLexicon,
    n_classes: usize,
    per_class: usize,
    shared: usize,
    seed: u64,
) -> ConceptInventory {
    let mut pool = candidate_concepts(lexicon);
    let need = n_classes * per_class + shared;
    assert!(pool.len() >= need, "lexicon offers {} concepts, {need} needed", pool.len());
    pool.shuffle(&mut rng::labeled_stream(seed, "concepts"));
    let mut it = pool.into_iter();
    let classes = (0..n_classes).map(|_| it.by_ref().take(per_class).collect()).collect();
    let shared = it.take(shared).collect();
    ConceptInventory { classes, shared }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub label_names: Vec<String>,
    pub n_docs: usize,
    pub concepts_per_class: usize,
    pub shared_concepts: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a token is a function word.
    pub function_rate: f64,
    /// Probability that a content word comes from the document's own class.
    pub topic_rate: f64,
    /// Probability that a content word comes from another class.
    pub cross_rate: f64,
    /// Zipf exponent over concepts within a pool.
    pub concept_zipf: f64,
    /// Lemma `i` of a concept is used with weight `lemma_decay^i`.
    pub lemma_decay: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl CorpusSpec {
    /// Four-class topical news headlines with short bodies.
    pub fn news_like(n_docs: usize, seed: u64) -> Self {
        CorpusSpec {
            label_names: ["world", "sports", "business", "scitech"].map(String::from).to_vec(),
            n_docs,
            concepts_per_class: 700,
            shared_concepts: 600,
            min_len: 12,
            max_len: 30,
            function_rate: 0.35,
            topic_rate: 0.42,
            cross_rate: 0.08,
            concept_zipf: 0.8,
            lemma_decay: 0.7,
            label_noise: 0.06,
            seed,
        }
    }

    /// Two-class short, noisy posts.
    pub fn sentiment_like(n_docs: usize, seed: u64) -> Self {
        CorpusSpec {
            label_names: ["negative", "positive"].map(String::from).to_vec(),
            n_docs,
            concepts_per_class: 400,
            shared_concepts: 900,
            min_len: 6,
            max_len: 16,
            function_rate: 0.35,
            topic_rate: 0.40,
            cross_rate: 0.10,
            concept_zipf: 0.9,
            lemma_decay: 0.6,
            label_noise: 0.12,
            seed,
        }
    }

    pub fn inventory(&self, lexicon: &SynonymLexicon) -> ConceptInventory {
        select_concepts(lexicon, self.label_names.len(), self.concepts_per_class, self.shared_concepts, self.seed)
    }
}

struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn zipf(n: usize, s: f64) -> Self {
        Self::from_weights((1..=n).map(|r| (r as f64).powf(-s)))
    }

    fn decay(n: usize, d: f64) -> Self {
        Self::from_weights((0..n).map(|i| d.powi(i as i32)))
    }

    fn from_weights(w: impl Iterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = w
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        Sampler { cumulative }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Generates `spec.n_docs` labelled documents with balanced true classes.
pub fn generate_corpus(inventory: &ConceptInventory, spec: &CorpusSpec) -> Dataset {
    let k = spec.label_names.len();
    let mut r = rng::labeled_stream(spec.seed, "corpus");
    let class_sampler = Sampler::zipf(spec.concepts_per_class, spec.concept_zipf);
    let shared_sampler = Sampler::zipf(inventory.shared.len().max(1), spec.concept_zipf);
    let lemma_samplers: Vec<Sampler> = (0..=4).map(|n| Sampler::decay(n.max(1), spec.lemma_decay)).collect();

    let render = |c: &Concept, r: &mut rng::Stream| c.lemmas[lemma_samplers[c.lemmas.len()].draw(r)].clone();

    let mut records = Vec::with_capacity(spec.n_docs);
    for id in 0..spec.n_docs {
        let class = id % k;
        let len = r.random_range(spec.min_len..=spec.max_len);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            if r.random::<f64>() < spec.function_rate {
                tokens.push(FUNCTION_WORDS[r.random_range(0..FUNCTION_WORDS.len())].to_string());
                continue;
            }
            let u = r.random::<f64>();
            let concept = if u < spec.topic_rate {
                &inventory.classes[class][class_sampler.draw(&mut r)]
            } else if u < spec.topic_rate + spec.cross_rate && k > 1 {
                let other = (class + 1 + r.random_range(0..k - 1)) % k;
                &inventory.classes[other][class_sampler.draw(&mut r)]
            } else {
                &inventory.shared[shared_sampler.draw(&mut r)]
            };
            tokens.push(render(concept, &mut r));
        }
        let label = if r.random::<f64>() < spec.label_noise && k > 1 {
            (class + 1 + r.random_range(0..k - 1)) % k
        } else {
            class
        };
        records.push(Document { id: id as u64, text: tokens.join(" "), label, origin: Origin::Original });
    }
    // Interleave classes randomly rather than round-robin.
    records.shuffle(&mut r);
    for (i, d) in records.iter_mut().enumerate() {
        d.id = i as u64;
    }
    Dataset::new(records, spec.label_names.clone()).expect("generated dataset is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub dim: usize,
    /// Weight of the class direction in a concept centre.
    pub topic_scale: f64,
    /// Spread of lemmas around their concept centre.
    pub lemma_noise: f64,
    /// Extra WordNet words with unrelated vectors.
    pub distractors: usize,
    pub seed: u64,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec { dim: 50, topic_scale: 0.8, lemma_noise: 0.3, distractors: 4000, seed: 7 }
    }
}

fn gaussian(dim: usize, r: &mut rng::Stream) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(r)).collect()
}

/// Word vectors for every concept lemma, the function words and
/// `spec.distractors` other lexicon words.
pub fn generate_embeddings(lexicon: &SynonymLexicon, inventory: &ConceptInventory, spec: &EmbeddingSpec) -> EmbeddingModel {
    let mut r = rng::labeled_stream(spec.seed, "embeddings");
    let d = spec.dim;
    let scale = 1.0 / (d as f64).sqrt();
    let mut pairs: Vec<(String, Vec<f32>)> = Vec::new();
    let emit_concept = |c: &Concept, direction: Option<&[f64]>, r: &mut rng::Stream, pairs: &mut Vec<(String, Vec<f32>)>| {
        let mut centre = gaussian(d, r);
        if let Some(dir) = direction {
            for (x, t) in centre.iter_mut().zip(dir) {
                *x += spec.topic_scale * t;
            }
        }
        for lemma in &c.lemmas {
            let v: Vec<f32> = centre
                .iter()
                .map(|&x| ((x + spec.lemma_noise * { let z: f64 = StandardNormal.sample(r); z }) * scale) as f32)
                .collect();
            pairs.push((lemma.clone(), v));
        }
    };
    let directions: Vec<Vec<f64>> = (0..inventory.classes.len()).map(|_| gaussian(d, &mut r)).collect();
    for (class, concepts) in inventory.classes.iter().enumerate() {
        for c in concepts {
            emit_concept(c, Some(&directions[class]), &mut r, &mut pairs);
        }
    }
    for c in &inventory.shared {
        emit_concept(c, None, &mut r, &mut pairs);
    }
    // Function words sit in one loose cluster of their own.
    let hub = gaussian(d, &mut r);
    for w in FUNCTION_WORDS {
        let v = gaussian(d, &mut r).iter().zip(&hub).map(|(x, h)| ((0.6 * x + h) * scale) as f32).collect();
        pairs.push((w.to_string(), v));
    }
    let taken: HashSet<String> = pairs.iter().map(|(w, _)| w.clone()).collect();
    let mut extra: Vec<&str> = lexicon
        .lemmas(Pos::Noun)
        .into_iter()
        .chain(lexicon.lemmas(Pos::Verb))
        .filter(|w| plain_word(w) && !taken.contains(*w))
        .collect();
    extra.sort_unstable();
    extra.dedup();
    extra.shuffle(&mut r);
    for w in extra.into_iter().take(spec.distractors) {
        pairs.push((w.to_string(), gaussian(d, &mut r).iter().map(|x| (x * scale) as f32).collect()));
    }
    pairs.shuffle(&mut r);
    EmbeddingModel::from_pairs(pairs).expect("generated vectors are consistent")
}

/// `{en_word: pivot_word}` tables for the offline translator. In the `fr`
/// table all lemmas of a concept share one pivot word; in `de` they share
/// one per consecutive pair of lemmas.
pub fn pivot_tables(inventory: &ConceptInventory) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut fr = BTreeMap::new();
    let mut de = BTreeMap::new();
    for (i, c) in inventory.all().enumerate() {
        for (j, lemma) in c.lemmas.iter().enumerate() {
            fr.insert(lemma.clone(), format!("fr{i}"));
            de.insert(lemma.clone(), format!("de{i}x{}", j / 2));
        }
    }
    BTreeMap::from([("de".to_string(), de), ("fr".to_string(), fr)])
}
