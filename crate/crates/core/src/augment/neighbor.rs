use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;

use super::{AugmentConfig, AugmentError, Augmenter};
use crate::corpus::tokenize;
use crate::embeddings::{EmbeddingModel, NeighborList};
use crate::rng::Stream;

/// One replacement made by [`embedding_augment_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub position: usize,
    pub from: String,
    pub to: String,
}

/// Draws an index with probability proportional to `max(weight, 0)`, or
/// uniformly when no weight is positive.
fn weighted_choice(neighbors: &NeighborList, rng: &mut Stream) -> usize {
    let total: f64 = neighbors.entries.iter().map(|(_, s)| s.max(0.0)).sum();
    if total <= 0.0 {
        return rng.random_range(0..neighbors.len());
    }
    let mut u = rng.random::<f64>() * total;
    for (i, (_, s)) in neighbors.entries.iter().enumerate() {
        let w = s.max(0.0);
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding can leave `u` marginally above the last positive weight.
    neighbors
        .entries
        .iter()
        .rposition(|(_, s)| *s > 0.0)
        .unwrap_or(neighbors.len() - 1)
}

fn augment_with<F>(model: &EmbeddingModel, text: &str, cfg: &AugmentConfig, rng: &mut Stream, neighbors: F) -> (String, Vec<Replacement>)
where
    F: Fn(&str) -> Arc<NeighborList>,
{
    let mut doc = tokenize(text);
    // Replacements are themselves in the vocabulary, so this set is fixed.
    let candidates: Vec<usize> = (0..doc.len()).filter(|&i| model.contains(&doc.tokens[i])).collect();
    if candidates.is_empty() {
        return (text.to_string(), Vec::new());
    }
    let mut events = Vec::with_capacity(cfg.runs);
    for _ in 0..cfg.runs {
        let position = candidates[rng.random_range(0..candidates.len())];
        let pool = neighbors(&doc.tokens[position]);
        if pool.is_empty() {
            continue;
        }
        let pick = weighted_choice(&pool, rng);
        let to = pool.entries[pick].0.clone();
        let from = std::mem::replace(&mut doc.tokens[position], to.clone());
        events.push(Replacement { position, from, to });
    }
    (doc.join(), events)
}

/// Runs `cfg.runs` rounds of: pick an in-vocabulary token uniformly, fetch
/// its `cfg.top_k` nearest neighbours, and replace it with one drawn in
/// proportion to its clamped cosine similarity. Sentences without any
/// in-vocabulary token are returned unchanged.
pub fn embedding_augment(model: &EmbeddingModel, text: &str, cfg: &AugmentConfig, rng: &mut Stream) -> String {
    embedding_augment_traced(model, text, cfg, rng).0
}

/// [`embedding_augment`] that also reports each replacement.
pub fn embedding_augment_traced(
    model: &EmbeddingModel,
    text: &str,
    cfg: &AugmentConfig,
    rng: &mut Stream,
) -> (String, Vec<Replacement>) {
    augment_with(model, text, cfg, rng, |w| Arc::new(model.top_k_neighbors(w, cfg.top_k)))
}

/// Embedding-neighbour augmenter with a per-word neighbour cache shared
/// across threads.
pub struct EmbeddingAugmenter {
    model: Arc<EmbeddingModel>,
    cfg: AugmentConfig,
    cache: RwLock<HashMap<String, Arc<NeighborList>>>,
}

impl EmbeddingAugmenter {
    pub fn new(model: Arc<EmbeddingModel>, cfg: AugmentConfig) -> Result<Self, AugmentError> {
        cfg.validate()?;
        Ok(EmbeddingAugmenter {
            model,
            cfg,
            cache: RwLock::new(HashMap::new()),
        })
    }

    fn neighbors(&self, word: &str) -> Arc<NeighborList> {
        if let Some(hit) = self.cache.read().unwrap().get(word) {
            return Arc::clone(hit);
        }
        let list = Arc::new(self.model.top_k_neighbors(word, self.cfg.top_k));
        self.cache
            .write()
            .unwrap()
            .entry(word.to_string())
            .or_insert(list)
            .clone()
    }
}

impl Augmenter for EmbeddingAugmenter {
    fn name(&self) -> &str {
        "embedding"
    }

    fn augment(&self, text: &str, rng: &mut Stream) -> Result<String, AugmentError> {
        Ok(augment_with(&self.model, text, &self.cfg, rng, |w| self.neighbors(w)).0)
    }
}
